#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mnac/theory.hpp"

using namespace mnac;
using namespace mnac::theory;

namespace {
const ChannelConfig kSnr10{10.0, 1.0, 1.0};  // P=10, sigma^2=1, sigma_w^2=1
}

TEST_CASE("binary entropy edges and symmetry") {
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(binary_entropy(0.2) == doctest::Approx(binary_entropy(0.8)).epsilon(1e-15));
}

TEST_CASE("mutual information degenerate inputs and frozen oracle value") {
    ChannelConfig cfg{1.0, 1.0, 0.1};
    CHECK(mutual_info(1.0, 0.0, 4, cfg) == 0.0);
    CHECK(mutual_info(1.0, 1.0, 4, cfg) == 0.0);
    CHECK(mutual_info(0.0, 0.3, 4, cfg) == 0.0);  // gamma = 0: output constant 1
    // frozen from a 40-digit arbitrary-precision evaluation of the 5-term sum
    CHECK(mutual_info(1.0, 0.3, 4, cfg) ==
          doctest::Approx(0.24151659262508079).epsilon(1e-12));
    CHECK(mutual_info(2.0, 0.4, 7, kSnr10) >= 0.0);
    CHECK_THROWS_AS(mutual_info(1.0, 1.5, 4, cfg), std::invalid_argument);
    CHECK_THROWS_AS(mutual_info(1.0, 0.5, 0, cfg), std::invalid_argument);
}

TEST_CASE("optimize_capacity dominates the coarse grid and is deterministic") {
    const auto cap = optimize_capacity(20, kSnr10);
    CHECK(cap.rate > 0.0);
    CHECK(cap.rate <= 1.0);
    CHECK(cap.q >= 0.0);
    CHECK(cap.q <= 1.0);
    // frozen from an independent scipy optimization of the same objective
    CHECK(cap.rate == doctest::Approx(0.48700).epsilon(2e-4));
    CHECK(cap.gamma == doctest::Approx(3.5535).epsilon(2e-3));
    CHECK(cap.q == doctest::Approx(0.03413).epsilon(2e-2));

    for (double lg = -3.0; lg <= 3.0; lg += 0.37) {
        for (double q = 0.0; q <= 1.0; q += 0.11) {
            CHECK(cap.rate >= mutual_info(std::pow(10.0, lg), q, 20, kSnr10) - 1e-9);
        }
    }
    const auto again = optimize_capacity(20, kSnr10);
    CHECK(again.rate == cap.rate);
    CHECK(again.gamma == cap.gamma);
    CHECK(again.q == cap.q);
}

TEST_CASE("optimal q soft regression band at k=4, snr=10") {
    const auto cap = optimize_capacity(4, kSnr10);
    CHECK(cap.q >= 0.1);
    CHECK(cap.q <= 0.3);
}

TEST_CASE("capacity vanishes with the snr") {
    ChannelConfig tiny{1e-9, 1.0, 1.0};
    CHECK(optimize_capacity(3, tiny).rate < 1e-6);
}

TEST_CASE("min_id_cost arithmetic, monotonicity and snr ordering") {
    CapacityPoint cap;
    cap.rate = 0.25;
    CHECK(min_id_cost(1024, 1, cap) == doctest::Approx(40.0));
    CHECK_THROWS_AS(min_id_cost(10, 10, cap), std::invalid_argument);

    double prev = 0.0;
    for (int k = 1; k <= 50; k += 7) {
        const double c = min_id_cost(1000, k, kSnr10);
        CHECK(c > prev);
        prev = c;
    }
    ChannelConfig snr1{1.0, 1.0, 1.0};
    CHECK(min_id_cost(1000, 20, kSnr10) < min_id_cost(1000, 20, snr1));
}

TEST_CASE("stage-count invariance of the multi-stage predictor") {
    // two-stage per-stage sum k_j log2(ell_j) / C(k_j) vs the single bound
    const int ell = 10000, k = 20;
    const double eta1 = 0.75;
    const int k1 = static_cast<int>(std::lround(k * eta1));
    const double c_full = optimize_capacity(k, kSnr10).rate;
    const double c_tail = optimize_capacity(k - k1, kSnr10).rate;
    const double staged = k1 * std::log2(double(ell)) / c_full +
                          (k - k1) * std::log2(double(ell - k)) / c_tail;
    const double bound = min_id_cost(ell, k, kSnr10);
    CHECK(std::abs(staged - bound) / bound < 0.05);
}

TEST_CASE("chernoff test length") {
    TestErrorModel sym{0.05, 0.05};
    // frozen: smallest even n with 20 * exp(-(n/2) ln(1/0.19)) <= 1e-3
    CHECK(chernoff_test_length(20, sym, 1e-3) == 12);
    CHECK(chernoff_test_length(20, sym, 1e-2) == 10);

    // scan oracle
    const double d = std::log(1.0 / (4 * 0.05 * 0.95));
    for (int kj : {1, 3, 20, 77}) {
        const int n = chernoff_test_length(kj, sym, 1e-3);
        CHECK(n % 2 == 0);
        CHECK(kj * std::exp(-(n / 2.0) * d) <= 1e-3);
        CHECK(kj * std::exp(-((n - 2) / 2.0) * d) > 1e-3);
    }

    // definitional bound check at n = 20
    TestErrorModel rho01{0.1, 0.1};
    const int n = chernoff_test_length(1, rho01, std::exp(-10.0 * std::log(1.0 / 0.36)));
    CHECK(n <= 20);

    TestErrorModel degenerate{0.5, 0.05};
    CHECK_THROWS_AS(chernoff_test_length(5, degenerate, 1e-2), DegenerateTest);
    TestErrorModel worse{0.7, 0.05};
    CHECK_THROWS_AS(chernoff_test_length(5, worse, 1e-2), DegenerateTest);

    // Theta(log k) growth: n(k)/ln(k) within a factor 2 band over k in 2..128
    // (rho near 1/2 so even-rounding and the ln(1/target) offset stay small
    // against the ln k term)
    TestErrorModel wide{0.4, 0.4};
    double lo = 1e300, hi = 0.0;
    for (int kj = 2; kj <= 128; kj *= 2) {
        const double r = chernoff_test_length(kj, wide, 0.5) / std::log(double(kj));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(hi / lo <= 2.0 * (1.0 + 1e-9));
}

TEST_CASE("feedback overhead") {
    CHECK(feedback_overhead({2}, {4}, 2.0) == 1);  // k=c_fb, log2 log2 4 = 1
    const double base = feedback_overhead_raw({3, 5}, {1000, 900}, 1.7);
    CHECK(feedback_overhead_raw({6, 10}, {1000, 900}, 1.7) ==
          doctest::Approx(2.0 * base).epsilon(1e-12));
    CHECK(feedback_overhead({3, 5}, {1000, 900}, 1.7) ==
          static_cast<long>(std::ceil(base)));
    CHECK_THROWS_AS(feedback_overhead({1}, {2}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(feedback_overhead({1}, {4}, 0.0), std::invalid_argument);
    CHECK(feedback_overhead({0}, {4}, 1.0) == 0);
}

TEST_CASE("gaussian feedback capacity") {
    CHECK(gaussian_fb_capacity(1.0) == doctest::Approx(1.0));
    CHECK(gaussian_fb_capacity(0.0) == 0.0);
    CHECK(gaussian_fb_capacity(15.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(gaussian_fb_capacity(-1.0), std::invalid_argument);
}

TEST_CASE("symmetric validation threshold equalizes the two error directions") {
    const double g = symmetric_validation_threshold(kSnr10);
    const auto err = validation_errors(g, kSnr10);
    CHECK(err.p01 == doctest::Approx(err.p10).epsilon(1e-10));
    // frozen from an independent bisection at snr = 10
    CHECK(g == doctest::Approx(1.86045).epsilon(1e-4));
    CHECK(err.p01 == doctest::Approx(0.15560).epsilon(1e-3));
}
