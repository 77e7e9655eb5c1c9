#include "mnac/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace mnac {

void ChannelConfig::validate() const {
    if (!(on_power > 0.0) || !(fading_var > 0.0) || !(noise_var > 0.0)) {
        throw std::invalid_argument("ChannelConfig: P, sigma^2 and sigma_w^2 must be positive");
    }
}

void DetectorThreshold::validate() const {
    if (!(gamma >= 0.0)) {
        throw std::invalid_argument("DetectorThreshold: gamma must be >= 0");
    }
}

double transition_prob(int v, DetectorThreshold gamma, const ChannelConfig& cfg) {
    cfg.validate();
    gamma.validate();
    if (v < 0) throw std::invalid_argument("transition_prob: v must be >= 0");
    const double mean = static_cast<double>(v) * cfg.fading_var * cfg.on_power + cfg.noise_var;
    return std::exp(-gamma.gamma / mean);
}

bool simulate_symbol(int num_on, DetectorThreshold gamma, const ChannelConfig& cfg, Rng& rng,
                     bool fast) {
    if (fast) {
        return rng.bernoulli(transition_prob(num_on, gamma, cfg));
    }
    cfg.validate();
    gamma.validate();
    if (num_on < 0) throw std::invalid_argument("simulate_symbol: num_on must be >= 0");
    // CN(0, sigma^2) as independent real/imag parts of variance sigma^2/2 each;
    // |S|^2 given V = v is then exponential with mean v*sigma^2*P + sigma_w^2.
    const double fade_sd = std::sqrt(cfg.fading_var / 2.0);
    const double amp = std::sqrt(cfg.on_power);
    double re = 0.0, im = 0.0;
    for (int i = 0; i < num_on; ++i) {
        re += amp * fade_sd * rng.normal();
        im += amp * fade_sd * rng.normal();
    }
    const double noise_sd = std::sqrt(cfg.noise_var / 2.0);
    re += noise_sd * rng.normal();
    im += noise_sd * rng.normal();
    return re * re + im * im > gamma.gamma;
}

std::vector<std::uint8_t> simulate_block(const std::uint8_t* preamble_bits, std::size_t rows,
                                         std::size_t cols, const std::vector<std::uint8_t>& active,
                                         DetectorThreshold gamma, const ChannelConfig& cfg,
                                         Rng& rng, bool fast) {
    if (active.size() != rows) {
        throw std::invalid_argument("simulate_block: activity mask length != preamble rows");
    }
    std::vector<std::uint8_t> z(cols);
    for (std::size_t t = 0; t < cols; ++t) {
        int v = 0;
        for (std::size_t i = 0; i < rows; ++i) {
            v += active[i] & preamble_bits[i * cols + t];
        }
        z[t] = simulate_symbol(v, gamma, cfg, rng, fast) ? 1 : 0;
    }
    return z;
}

}  // namespace mnac
