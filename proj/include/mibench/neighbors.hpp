#pragma once

// Exact nearest-neighbor distances and range counts under the max-norm or
// Euclidean metric.  A K-d tree serves moderate dimensions; above d = 20 (or
// below 64 points) an exhaustive scan is used instead, with identical
// results.  Euclidean comparisons are carried out on squared distances so
// that the tree and the scan agree bit-for-bit.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mibench/linalg.hpp"

namespace mibench {

enum class Metric { chebyshev, euclidean };

class NeighborIndex {
public:
    NeighborIndex(RowMatrix points, Metric metric)
        : points_(std::move(points)), metric_(metric) {
        n_ = static_cast<int>(points_.rows());
        d_ = static_cast<int>(points_.cols());
        if (n_ < 1 || d_ < 1) {
            throw std::invalid_argument("NeighborIndex: empty point set");
        }
        if (!points_.allFinite()) {
            throw std::invalid_argument("NeighborIndex: points must be finite");
        }
        use_tree_ = (d_ <= 20 && n_ >= 64);
        if (use_tree_) build_tree();
    }

    static NeighborIndex from_block(const RowMatrix& rows, int col0, int dims, Metric metric) {
        return NeighborIndex(rows.middleCols(col0, dims), metric);
    }

    int size() const { return n_; }
    int dim() const { return d_; }
    Metric metric() const { return metric_; }

    // Exact distance from point `query_row` to its k-th nearest neighbor,
    // the query point itself excluded.
    double kth_distance(int query_row, int k) const {
        check_row(query_row);
        if (k < 1 || k >= n_) {
            throw std::invalid_argument("kth_distance: requires 1 <= k < N");
        }
        std::vector<double> heap;  // max-heap of the k smallest keys seen
        heap.reserve(static_cast<std::size_t>(k) + 1);
        if (use_tree_) {
            knn_descend(0, query_row, k, heap);
        } else {
            for (int j = 0; j < n_; ++j) {
                if (j == query_row) continue;
                heap_offer(heap, k, key_distance(query_row, j));
            }
        }
        return from_key(heap.front());
    }

    // Number of points (query excluded) with distance < radius, or <= radius
    // when strict is false.
    long range_count(int query_row, double radius, bool strict) const {
        check_row(query_row);
        if (!(radius > 0.0)) {
            throw std::invalid_argument("range_count: radius must be > 0");
        }
        const double key_radius = to_key(radius);
        long count = 0;
        if (use_tree_) {
            range_descend(0, query_row, key_radius, strict, count);
        } else {
            for (int j = 0; j < n_; ++j) {
                if (j == query_row) continue;
                const double key = key_distance(query_row, j);
                if (strict ? key < key_radius : key <= key_radius) ++count;
            }
        }
        return count;
    }

private:
    struct Node {
        int begin = 0, end = 0;     // range into order_
        int left = -1, right = -1;  // children; -1 marks a leaf
    };

    static constexpr int kLeafSize = 16;

    RowMatrix points_;
    Metric metric_;
    int n_ = 0, d_ = 0;
    bool use_tree_ = false;

    std::vector<Node> nodes_;
    std::vector<int> order_;     // permuted row indices, contiguous per node
    std::vector<int> position_;  // position of each row inside order_
    std::vector<double> box_lo_, box_hi_;  // per node, d_ entries each

    void check_row(int r) const {
        if (r < 0 || r >= n_) throw std::out_of_range("NeighborIndex: row out of range");
    }

    // Comparison key: the metric distance for the max-norm, the squared
    // distance for Euclidean.
    double key_distance(int a, int b) const {
        const double* pa = points_.row(a).data();
        const double* pb = points_.row(b).data();
        if (metric_ == Metric::chebyshev) {
            double m = 0.0;
            for (int j = 0; j < d_; ++j) {
                const double diff = std::abs(pa[j] - pb[j]);
                if (diff > m) m = diff;
            }
            return m;
        }
        double s = 0.0;
        for (int j = 0; j < d_; ++j) {
            const double diff = pa[j] - pb[j];
            s += diff * diff;
        }
        return s;
    }

    double to_key(double dist) const {
        return metric_ == Metric::chebyshev ? dist : dist * dist;
    }
    double from_key(double key) const {
        return metric_ == Metric::chebyshev ? key : std::sqrt(key);
    }

    static void heap_offer(std::vector<double>& heap, int k, double key) {
        if (static_cast<int>(heap.size()) < k) {
            heap.push_back(key);
            std::push_heap(heap.begin(), heap.end());
        } else if (key < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = key;
            std::push_heap(heap.begin(), heap.end());
        }
    }

    void build_tree() {
        order_.resize(n_);
        for (int i = 0; i < n_; ++i) order_[i] = i;
        nodes_.reserve(2 * (n_ / kLeafSize + 2));
        build_node(0, n_);
        position_.resize(n_);
        for (int pos = 0; pos < n_; ++pos) position_[order_[pos]] = pos;
    }

    int build_node(int begin, int end) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({begin, end, -1, -1});
        box_lo_.resize(box_lo_.size() + d_, std::numeric_limits<double>::infinity());
        box_hi_.resize(box_hi_.size() + d_, -std::numeric_limits<double>::infinity());
        double* lo = &box_lo_[static_cast<std::size_t>(id) * d_];
        double* hi = &box_hi_[static_cast<std::size_t>(id) * d_];
        for (int p = begin; p < end; ++p) {
            const double* row = points_.row(order_[p]).data();
            for (int j = 0; j < d_; ++j) {
                lo[j] = std::min(lo[j], row[j]);
                hi[j] = std::max(hi[j], row[j]);
            }
        }
        if (end - begin <= kLeafSize) return id;

        int split_dim = 0;
        double best_extent = -1.0;
        for (int j = 0; j < d_; ++j) {
            const double extent = hi[j] - lo[j];
            if (extent > best_extent) {
                best_extent = extent;
                split_dim = j;
            }
        }
        if (best_extent <= 0.0) return id;  // all points identical

        const int mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) { return points_(a, split_dim) < points_(b, split_dim); });
        const int left = build_node(begin, mid);
        const int right = build_node(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    // Smallest possible comparison key between the query point and node box.
    double box_min_key(int node, int query_row) const {
        const double* q = points_.row(query_row).data();
        const double* lo = &box_lo_[static_cast<std::size_t>(node) * d_];
        const double* hi = &box_hi_[static_cast<std::size_t>(node) * d_];
        if (metric_ == Metric::chebyshev) {
            double m = 0.0;
            for (int j = 0; j < d_; ++j) {
                const double gap = std::max({lo[j] - q[j], q[j] - hi[j], 0.0});
                if (gap > m) m = gap;
            }
            return m;
        }
        double s = 0.0;
        for (int j = 0; j < d_; ++j) {
            const double gap = std::max({lo[j] - q[j], q[j] - hi[j], 0.0});
            s += gap * gap;
        }
        return s;
    }

    // Largest possible comparison key between the query point and node box.
    double box_max_key(int node, int query_row) const {
        const double* q = points_.row(query_row).data();
        const double* lo = &box_lo_[static_cast<std::size_t>(node) * d_];
        const double* hi = &box_hi_[static_cast<std::size_t>(node) * d_];
        if (metric_ == Metric::chebyshev) {
            double m = 0.0;
            for (int j = 0; j < d_; ++j) {
                const double gap = std::max(q[j] - lo[j], hi[j] - q[j]);
                if (gap > m) m = gap;
            }
            return m;
        }
        double s = 0.0;
        for (int j = 0; j < d_; ++j) {
            const double gap = std::max(q[j] - lo[j], hi[j] - q[j]);
            s += gap * gap;
        }
        return s;
    }

    void knn_descend(int node, int query_row, int k, std::vector<double>& heap) const {
        const Node& nd = nodes_[node];
        if (nd.left < 0) {
            for (int p = nd.begin; p < nd.end; ++p) {
                const int j = order_[p];
                if (j == query_row) continue;
                heap_offer(heap, k, key_distance(query_row, j));
            }
            return;
        }
        const double dl = box_min_key(nd.left, query_row);
        const double dr = box_min_key(nd.right, query_row);
        const int first = (dl <= dr) ? nd.left : nd.right;
        const int second = (dl <= dr) ? nd.right : nd.left;
        const double dfirst = std::min(dl, dr);
        const double dsecond = std::max(dl, dr);
        if (static_cast<int>(heap.size()) < k || dfirst <= heap.front()) {
            knn_descend(first, query_row, k, heap);
        }
        if (static_cast<int>(heap.size()) < k || dsecond <= heap.front()) {
            knn_descend(second, query_row, k, heap);
        }
    }

    void range_descend(int node, int query_row, double key_radius, bool strict,
                       long& count) const {
        const Node& nd = nodes_[node];
        const double lo_key = box_min_key(node, query_row);
        if (strict ? lo_key >= key_radius : lo_key > key_radius) return;
        const double hi_key = box_max_key(node, query_row);
        if (strict ? hi_key < key_radius : hi_key <= key_radius) {
            count += nd.end - nd.begin;
            const int qpos = position_[query_row];
            if (qpos >= nd.begin && qpos < nd.end) --count;
            return;
        }
        if (nd.left < 0) {
            for (int p = nd.begin; p < nd.end; ++p) {
                const int j = order_[p];
                if (j == query_row) continue;
                const double key = key_distance(query_row, j);
                if (strict ? key < key_radius : key <= key_radius) ++count;
            }
            return;
        }
        range_descend(nd.left, query_row, key_radius, strict, count);
        range_descend(nd.right, query_row, key_radius, strict, count);
    }
};

}  // namespace mibench
