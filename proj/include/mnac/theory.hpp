#pragma once

#include <stdexcept>
#include <vector>

#include "mnac/channel.hpp"

namespace mnac::theory {

// All rates are in bits per channel-use; costs in channel-uses.

struct CapacityPoint {
    double gamma = 0.0;  // detector threshold at the optimum
    double q = 0.0;      // sampling probability at the optimum
    int k = 1;           // number of active devices
    double rate = 0.0;   // achieved mutual information
};

struct CostBreakdown {
    double joint_uses = 0.0;
    double validation_uses = 0.0;
    double feedback_uses = 0.0;
    double total() const { return joint_uses + validation_uses + feedback_uses; }
};

// Per-symbol error model of the validation hypothesis test.
struct TestErrorModel {
    double p10 = 0.0;  // 'On' detected as 'Off':  1 - transition_prob(1, gamma_val)
    double p01 = 0.0;  // 'Off' detected as 'On':  transition_prob(0, gamma_val)
};

struct DegenerateTest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary entropy in bits, with h(0) = h(1) = 0 exactly.
double binary_entropy(double x);

// I(X;Z) of the equivalent channel: h(E[p_V]) - E[h(p_V)] with
// V ~ Binomial(k, q) and p_v = exp(-gamma/(v sigma^2 P + sigma_w^2)).
// The expectation is an exact (k+1)-term sum with log-domain weights.
double mutual_info(double gamma, double q, int k, const ChannelConfig& cfg);

// Deterministic maximization of mutual_info over (gamma, q): 200 log-spaced
// gamma in [1e-3, 1e3]*sigma_w^2 x 101 linear q, then coordinate-wise
// golden-section refinement to relative tolerance 1e-8.
CapacityPoint optimize_capacity(int k, const ChannelConfig& cfg);

// k log2(ell) / C. Stage-count free: the bound is the same for any m.
double min_id_cost(int ell, int k, const ChannelConfig& cfg);
double min_id_cost(int ell, int k, const CapacityPoint& cap);

// Smallest even n with k_j * exp(-(n/2) ln(1/(4 rho (1-rho)))) <= target,
// rho being the transition probability closest to 1/2. Throws DegenerateTest
// when rho >= 1/2 (the bound is vacuous there).
int chernoff_test_length(int k_j, const TestErrorModel& errors, double target);

// Sum over stages of (k_j / c_fb) log2 log2(ell_j), rounded up. ell_j < 3 is
// rejected (log log would be nonpositive).
long feedback_overhead(const std::vector<int>& stage_ks, const std::vector<int>& stage_ells,
                       double c_fb);
double feedback_overhead_raw(const std::vector<int>& stage_ks, const std::vector<int>& stage_ells,
                             double c_fb);

// log2(1 + snr); feedback link modeled as a Gaussian channel at uplink SNR.
double gaussian_fb_capacity(double snr);

// Threshold at which the validation test is symmetric:
// e^{-g/sigma_w^2} == 1 - e^{-g/(sigma^2 P + sigma_w^2)}.
double symmetric_validation_threshold(const ChannelConfig& cfg);
TestErrorModel validation_errors(double gamma_val, const ChannelConfig& cfg);

}  // namespace mnac::theory
