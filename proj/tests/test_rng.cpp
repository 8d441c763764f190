#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "mibench/rng.hpp"

using namespace mibench;

TEST_CASE("philox known-answer vectors", "[rng]") {
    // Frozen from an independent Philox4x64-10 implementation (numpy.random).
    {
        RngStream s(0, 0);
        const std::uint64_t expect[8] = {
            0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL,
            0x907d7a052fd5b4dcULL, 0x809bf322883987c3ULL, 0x471128b9e807f7ddULL,
            0xf250ba0dbec065b7ULL, 0xfc6ed66767a457bcULL};
        for (std::uint64_t e : expect) CHECK(s.next_u64() == e);
    }
    {
        RngStream s(0x9E3779B97F4A7C15ULL, 0x2545F4914F6CDD1DULL);
        const std::uint64_t expect[8] = {
            0x1f2698265eb39e9dULL, 0x7bc4e92f0c9c4274ULL, 0xd7a6cfc51b6e7046ULL,
            0xd7dd029fcb812ac1ULL, 0x88027301b1618f7cULL, 0xdb53e985875aa0f3ULL,
            0xc88c797b3a01f4f6ULL, 0x0540b674fd7e7753ULL};
        for (std::uint64_t e : expect) CHECK(s.next_u64() == e);
    }
}

TEST_CASE("streams replay deterministically and separate by id", "[rng]") {
    RngStream a(123, "task-x", 4, "sample");
    RngStream b(123, "task-x", 4, "sample");
    RngStream c(123, "task-x", 5, "sample");
    bool identical = true, distinct = false;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t va = a.next_u64();
        identical = identical && (va == b.next_u64());
        distinct = distinct || (va != c.next_u64());
    }
    CHECK(identical);
    CHECK(distinct);
    CHECK(derive_stream_id("task-x", 4, "sample") != derive_stream_id("task-x", 4, "split"));
    CHECK(derive_stream_id("a", 1, "p") != derive_stream_id("a1", 0x70, ""));
}

TEST_CASE("uniform01 stays inside the open interval", "[rng]") {
    RngStream s(7, 7);
    for (int i = 0; i < 200000; ++i) {
        const double u = s.uniform01();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("standard normal moments under the CLT bound", "[rng]") {
    RngStream s(11, 0);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = s.standard_normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) <= 4.0 * std::sqrt(2.0 / double(n)));
}

TEST_CASE("chi-square moments match dof", "[rng]") {
    RngStream s(13, 1);
    const int n = 100000;
    for (int dof : {1, 4}) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += s.chi_square(dof);
        const double mean = sum / n;
        // Var[chi2_k] = 2k
        CHECK(std::abs(mean - dof) <= 4.0 * std::sqrt(2.0 * dof / double(n)));
    }
    CHECK_THROWS_AS(s.chi_square(0), std::invalid_argument);
}

TEST_CASE("derangement has no fixed point and permutation is complete", "[rng]") {
    RngStream s(17, 3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = s.derangement(64);
        std::set<std::size_t> seen(d.begin(), d.end());
        CHECK(seen.size() == 64);
        for (std::size_t i = 0; i < d.size(); ++i) REQUIRE(d[i] != i);
    }
    const auto p = s.permutation(257);
    std::set<std::size_t> seen(p.begin(), p.end());
    CHECK(seen.size() == 257);
}
