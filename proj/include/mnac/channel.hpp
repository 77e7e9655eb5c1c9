#pragma once

#include <cstdint>
#include <vector>

#include "mnac/rng.hpp"

namespace mnac {

// Physical parameters of the on-off uplink. snr is always derived from the
// three stored quantities, never stored on its own.
struct ChannelConfig {
    double on_power = 1.0;   // P, power of an 'On' symbol
    double fading_var = 1.0; // sigma^2, total variance of the complex channel coefficient
    double noise_var = 1.0;  // sigma_w^2, total variance of the complex AWGN

    double snr() const { return on_power * fading_var / noise_var; }
    void validate() const;  // throws std::invalid_argument
};

struct DetectorThreshold {
    double gamma = 0.0;  // energy threshold, >= 0
    void validate() const;
};

// P(Z = 1 | V = v) of the equivalent binary-output channel:
// exp(-gamma / (v*sigma^2*P + sigma_w^2)).
double transition_prob(int v, DetectorThreshold gamma, const ChannelConfig& cfg);

// One channel-use: num_on active 'On' transmitters, Rayleigh fading redrawn
// per use, complex AWGN, envelope detection against gamma. With fast=true the
// output bit is drawn directly as Bernoulli(transition_prob); the full
// physics path is the statistical oracle for the fast one.
bool simulate_symbol(int num_on, DetectorThreshold gamma, const ChannelConfig& cfg, Rng& rng,
                     bool fast = false);

// One bit per channel-use for an l x n preamble slice (row-major bits) and an
// activity mask of length l.
std::vector<std::uint8_t> simulate_block(const std::uint8_t* preamble_bits, std::size_t rows,
                                         std::size_t cols, const std::vector<std::uint8_t>& active,
                                         DetectorThreshold gamma, const ChannelConfig& cfg,
                                         Rng& rng, bool fast = false);

}  // namespace mnac
