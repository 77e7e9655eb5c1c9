#pragma once

#include <cstdint>
#include <vector>

#include "mnac/channel.hpp"

namespace mnac::codec {

// l x n bank of binary on-off preambles, regenerable from (seed, l, n, q).
struct PreambleMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> bits;      // row-major
    std::vector<double> q_schedule;      // per-use sampling probability
    std::uint64_t seed = 0;

    std::uint8_t bit(std::size_t i, std::size_t t) const { return bits[i * cols + t]; }
};

PreambleMatrix gen_preambles(std::size_t ell, std::size_t n, double q, std::uint64_t seed);
PreambleMatrix gen_preambles(std::size_t ell, std::size_t n, const std::vector<double>& q_per_use,
                             std::uint64_t seed);

// Distribution of the sum of independent Bernoulli(on_probs[i]) variables,
// by iterative convolution. Exact up to round-off; sums to 1 within 1e-12.
std::vector<double> weight_pmf(const std::vector<double>& on_probs);

struct DecodeOptions {
    int max_iters = 50;
    double damping = 0.5;  // on device-to-factor messages
    double tol = 1e-6;     // max marginal change for convergence
};

struct DecodeResult {
    std::vector<std::size_t> estimated_set;  // exactly k_target indices, ascending
    std::vector<double> marginals;           // per-device posterior activity (BP only)
    int iterations = 0;
    bool converged = false;
};

// Sum-product decoding on the device/observation bipartite graph with exact
// leave-one-out factor updates; returns the k_target highest-marginal devices
// (ties to the lowest index).
DecodeResult bp_decode(const PreambleMatrix& pre, const std::vector<std::uint8_t>& z,
                       std::size_t k_target, double gamma, const ChannelConfig& cfg,
                       const DecodeOptions& opts = {});

// Noisy-COMP comparator: per-device score = fraction of its 'On' uses with
// Z = 1; devices with score >= match_threshold rank above the rest.
DecodeResult ncomp_decode(const PreambleMatrix& pre, const std::vector<std::uint8_t>& z,
                          std::size_t k_target, double match_threshold);

// Exhaustive maximum-likelihood reference for small instances
// (C(ell, k) <= 10^6 guarded). Ties resolved to the lexicographically first
// subset.
std::vector<std::size_t> ml_oracle_decode(const PreambleMatrix& pre,
                                          const std::vector<std::uint8_t>& z, std::size_t k,
                                          double gamma, const ChannelConfig& cfg);

}  // namespace mnac::codec
