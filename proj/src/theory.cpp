#include "mnac/theory.hpp"

#include <algorithm>
#include <cmath>

namespace mnac::theory {

namespace {

constexpr double kLog2 = 0.6931471805599453;

// Binomial(k, q) pmf via log-domain weights; exact at q = 0 and q = 1.
void binomial_pmf(int k, double q, std::vector<double>& w) {
    w.assign(static_cast<std::size_t>(k) + 1, 0.0);
    if (q <= 0.0) {
        w[0] = 1.0;
        return;
    }
    if (q >= 1.0) {
        w[static_cast<std::size_t>(k)] = 1.0;
        return;
    }
    const double lq = std::log(q), l1q = std::log1p(-q);
    const double lgk = std::lgamma(k + 1.0);
    for (int v = 0; v <= k; ++v) {
        const double lw =
            lgk - std::lgamma(v + 1.0) - std::lgamma(k - v + 1.0) + v * lq + (k - v) * l1q;
        w[static_cast<std::size_t>(v)] = std::exp(lw);
    }
}

struct MiEval {
    int k;
    const ChannelConfig* cfg;
    mutable std::vector<double> w;

    double operator()(double gamma, double q) const {
        binomial_pmf(k, q, w);
        double mean_p = 0.0, mean_h = 0.0;
        for (int v = 0; v <= k; ++v) {
            const double p =
                std::exp(-gamma / (v * cfg->fading_var * cfg->on_power + cfg->noise_var));
            mean_p += w[static_cast<std::size_t>(v)] * p;
            mean_h += w[static_cast<std::size_t>(v)] * binary_entropy(p);
        }
        const double mi = binary_entropy(mean_p) - mean_h;
        return mi > 0.0 ? mi : 0.0;  // clip Jensen round-off at the boundary
    }
};

// Golden-section maximization on [a, b] to relative tolerance rtol.
template <typename F>
double golden_max(F f, double a, double b, double rtol) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > rtol * (std::abs(a) + std::abs(b) + 1e-300)) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -(x * std::log(x) + (1.0 - x) * std::log1p(-x)) / kLog2;
}

double mutual_info(double gamma, double q, int k, const ChannelConfig& cfg) {
    cfg.validate();
    if (k < 1) throw std::invalid_argument("mutual_info: k must be >= 1");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("mutual_info: q must be in [0,1]");
    if (!(gamma >= 0.0)) throw std::invalid_argument("mutual_info: gamma must be >= 0");
    MiEval eval{k, &cfg, {}};
    return eval(gamma, q);
}

CapacityPoint optimize_capacity(int k, const ChannelConfig& cfg) {
    cfg.validate();
    if (k < 1) throw std::invalid_argument("optimize_capacity: k must be >= 1");
    MiEval eval{k, &cfg, {}};

    constexpr int kGammaGrid = 200;
    constexpr int kQGrid = 101;
    const double lg_lo = std::log(1e-3 * cfg.noise_var);
    const double lg_hi = std::log(1e3 * cfg.noise_var);
    const double lg_step = (lg_hi - lg_lo) / (kGammaGrid - 1);

    double best = -1.0, best_lg = lg_lo, best_q = 0.5;
    for (int gi = 0; gi < kGammaGrid; ++gi) {
        const double lg = lg_lo + gi * lg_step;
        const double gamma = std::exp(lg);
        for (int qi = 0; qi < kQGrid; ++qi) {
            const double q = static_cast<double>(qi) / (kQGrid - 1);
            const double mi = eval(gamma, q);
            if (mi > best) {
                best = mi;
                best_lg = lg;
                best_q = q;
            }
        }
    }

    // Coordinate-wise golden-section around the best cell.
    double lg = best_lg, q = best_q;
    const double q_step = 1.0 / (kQGrid - 1);
    for (int round = 0; round < 40; ++round) {
        const double lg_prev = lg, q_prev = q;
        lg = golden_max([&](double x) { return eval(std::exp(x), q); },
                        std::max(lg_lo, lg - 2 * lg_step), std::min(lg_hi, lg + 2 * lg_step),
                        1e-10);
        q = golden_max([&](double x) { return eval(std::exp(lg), x); },
                       std::max(0.0, q - 2 * q_step), std::min(1.0, q + 2 * q_step), 1e-10);
        if (std::abs(lg - lg_prev) <= 1e-8 * (1.0 + std::abs(lg)) &&
            std::abs(q - q_prev) <= 1e-8 * (1.0 + q)) {
            break;
        }
    }
    CapacityPoint out;
    out.gamma = std::exp(lg);
    out.q = q;
    out.k = k;
    out.rate = std::max(eval(out.gamma, out.q), best);
    return out;
}

double min_id_cost(int ell, int k, const CapacityPoint& cap) {
    if (!(ell > k && k >= 1)) throw std::invalid_argument("min_id_cost: need ell > k >= 1");
    return k * std::log2(static_cast<double>(ell)) / cap.rate;
}

double min_id_cost(int ell, int k, const ChannelConfig& cfg) {
    if (!(ell > k && k >= 1)) throw std::invalid_argument("min_id_cost: need ell > k >= 1");
    return min_id_cost(ell, k, optimize_capacity(k, cfg));
}

int chernoff_test_length(int k_j, const TestErrorModel& errors, double target) {
    if (k_j < 1) throw std::invalid_argument("chernoff_test_length: k_j must be >= 1");
    if (!(target > 0.0 && target < 1.0)) {
        throw std::invalid_argument("chernoff_test_length: target must be in (0,1)");
    }
    for (double p : {errors.p01, errors.p10}) {
        if (!(p > 0.0 && p < 1.0)) {
            throw std::invalid_argument("chernoff_test_length: transition probs must be in (0,1)");
        }
    }
    // rho: whichever of the two is closer to 1/2 (largest Chernoff factor).
    const double rho = std::abs(errors.p01 - 0.5) < std::abs(errors.p10 - 0.5) ? errors.p01
                                                                               : errors.p10;
    if (rho >= 0.5) throw DegenerateTest("chernoff_test_length: rho >= 1/2, bound vacuous");
    const double factor = 4.0 * rho * (1.0 - rho);
    const double exponent = std::log(1.0 / factor);  // 2 * D2(1/2 || rho), nats
    // smallest even n with k_j * exp(-(n/2) exponent) <= target
    const double n_real = 2.0 * std::log(k_j / target) / exponent;
    long n = std::lround(std::ceil(std::max(n_real, 0.0)));
    if (n % 2 != 0) ++n;
    if (n < 2) n = 2;
    while (k_j * std::exp(-(static_cast<double>(n) / 2.0) * exponent) > target) n += 2;
    return static_cast<int>(n);
}

double feedback_overhead_raw(const std::vector<int>& stage_ks, const std::vector<int>& stage_ells,
                             double c_fb) {
    if (stage_ks.size() != stage_ells.size()) {
        throw std::invalid_argument("feedback_overhead: list length mismatch");
    }
    if (!(c_fb > 0.0)) throw std::invalid_argument("feedback_overhead: c_fb must be > 0");
    double uses = 0.0;
    for (std::size_t j = 0; j < stage_ks.size(); ++j) {
        if (stage_ells[j] < 3) {
            throw std::invalid_argument("feedback_overhead: ell_j must be >= 3");
        }
        if (stage_ks[j] == 0) continue;
        uses += (static_cast<double>(stage_ks[j]) / c_fb) *
                std::log2(std::log2(static_cast<double>(stage_ells[j])));
    }
    return uses;
}

long feedback_overhead(const std::vector<int>& stage_ks, const std::vector<int>& stage_ells,
                       double c_fb) {
    return std::lround(std::ceil(feedback_overhead_raw(stage_ks, stage_ells, c_fb)));
}

double gaussian_fb_capacity(double snr) {
    if (!(snr >= 0.0)) throw std::invalid_argument("gaussian_fb_capacity: snr must be >= 0");
    return std::log2(1.0 + snr);
}

double symmetric_validation_threshold(const ChannelConfig& cfg) {
    cfg.validate();
    // f(g) = e^{-g/sw2} - (1 - e^{-g/(s2 P + sw2)}) is strictly decreasing with
    // f(0) = 1, f(inf) = -1; bisect.
    const double m1 = cfg.noise_var;
    const double m2 = cfg.fading_var * cfg.on_power + cfg.noise_var;
    auto f = [&](double g) { return std::exp(-g / m1) - (1.0 - std::exp(-g / m2)); };
    double lo = 0.0, hi = m1;
    while (f(hi) > 0.0) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

TestErrorModel validation_errors(double gamma_val, const ChannelConfig& cfg) {
    TestErrorModel m;
    m.p01 = transition_prob(0, {gamma_val}, cfg);
    m.p10 = 1.0 - transition_prob(1, {gamma_val}, cfg);
    return m;
}

}  // namespace mnac::theory
