#include "mnac/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mnac/kernels.hpp"
#include "mnac/rng.hpp"

namespace mnac::codec {

namespace {

double logit(double p) { return std::log(p) - std::log1p(-p); }
double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

std::vector<std::size_t> top_k_by_score(const std::vector<double>& score, std::size_t k) {
    std::vector<std::size_t> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;  // ties to the lowest device index
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

PreambleMatrix gen_preambles(std::size_t ell, std::size_t n, const std::vector<double>& q_per_use,
                             std::uint64_t seed) {
    if (ell < 1) throw std::invalid_argument("gen_preambles: ell must be >= 1");
    if (q_per_use.size() != n) throw std::invalid_argument("gen_preambles: schedule length != n");
    for (double q : q_per_use) {
        if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("gen_preambles: q outside [0,1]");
    }
    PreambleMatrix m;
    m.rows = ell;
    m.cols = n;
    m.q_schedule = q_per_use;
    m.seed = seed;
    m.bits.resize(ell * n);
    Rng rng(seed);
    for (std::size_t i = 0; i < ell; ++i) {
        for (std::size_t t = 0; t < n; ++t) {
            m.bits[i * n + t] = rng.bernoulli(q_per_use[t]) ? 1 : 0;
        }
    }
    return m;
}

PreambleMatrix gen_preambles(std::size_t ell, std::size_t n, double q, std::uint64_t seed) {
    return gen_preambles(ell, n, std::vector<double>(n, q), seed);
}

std::vector<double> weight_pmf(const std::vector<double>& on_probs) {
    for (double p : on_probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("weight_pmf: prob outside [0,1]");
    }
    std::vector<double> pmf(on_probs.size() + 1, 0.0);
    pmf[0] = 1.0;
    const auto& k = kernels::active();
    std::size_t len = 1;
    for (double p : on_probs) {
        k.bernoulli_fold(pmf.data(), len, p);
        ++len;
    }
    return pmf;
}

DecodeResult bp_decode(const PreambleMatrix& pre, const std::vector<std::uint8_t>& z,
                       std::size_t k_target, double gamma, const ChannelConfig& cfg,
                       const DecodeOptions& opts) {
    if (z.size() != pre.cols) throw std::invalid_argument("bp_decode: z length != preamble cols");
    if (k_target > pre.rows) throw std::invalid_argument("bp_decode: k_target > device count");
    cfg.validate();

    const std::size_t ell = pre.rows;
    DecodeResult res;
    res.marginals.assign(ell, 0.0);
    if (k_target == 0) {
        res.converged = true;
        return res;
    }

    const double prior = static_cast<double>(k_target) / static_cast<double>(ell);
    const double prior_logit = logit(prior);

    // Bipartite graph in CSR-ish form.
    struct Factor {
        std::uint8_t z;
        std::vector<std::uint32_t> dev;    // neighbor device ids
        std::vector<double> msg_in;        // device -> factor, P(beta = 1)
        std::vector<double> msg_out;       // factor -> device, log-likelihood ratio
    };
    std::vector<Factor> factors;
    factors.reserve(pre.cols);
    std::size_t max_deg = 0;
    for (std::size_t t = 0; t < pre.cols; ++t) {
        Factor f;
        f.z = z[t];
        for (std::size_t i = 0; i < ell; ++i) {
            if (pre.bit(i, t)) f.dev.push_back(static_cast<std::uint32_t>(i));
        }
        if (f.dev.empty()) continue;  // unconnected observation carries no device information
        max_deg = std::max(max_deg, f.dev.size());
        f.msg_in.assign(f.dev.size(), prior);
        f.msg_out.assign(f.dev.size(), 0.0);
        factors.push_back(std::move(f));
    }
    // device -> (factor, slot) adjacency
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> dev_adj(ell);
    for (std::size_t fi = 0; fi < factors.size(); ++fi) {
        for (std::size_t s = 0; s < factors[fi].dev.size(); ++s) {
            dev_adj[factors[fi].dev[s]].emplace_back(static_cast<std::uint32_t>(fi),
                                                     static_cast<std::uint32_t>(s));
        }
    }

    // P(Z=1 | V=v) table up to the largest factor degree + 1.
    std::vector<double> tp(max_deg + 2);
    for (std::size_t v = 0; v < tp.size(); ++v) {
        tp[v] = transition_prob(static_cast<int>(v), {gamma}, cfg);
    }

    const auto& kern = kernels::active();
    // Scratch: triangular prefix-pmf store plus two suffix likelihood tables.
    std::vector<double> prefix((max_deg + 1) * (max_deg + 2) / 2 + max_deg + 2);
    std::vector<double> h0(max_deg + 3), h1(max_deg + 3);

    std::vector<double> prev_marg(ell, prior);
    res.marginals.assign(ell, prior);

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        // ---- factor pass: exact leave-one-out weight pmfs ----
        for (auto& f : factors) {
            const std::size_t d = f.dev.size();
            // prefix pmfs F_s for s = 0..d-1, F_s has length s+1, laid out contiguously
            double* F = prefix.data();
            F[0] = 1.0;
            std::size_t off = 0, next_off = 1;
            for (std::size_t s = 1; s < d; ++s) {
                std::copy(F + off, F + off + s, F + next_off);
                kern.bernoulli_fold(F + next_off, s, f.msg_in[s - 1]);
                off = next_off;
                next_off += s + 1;
            }
            // suffix likelihood tables, beta = 0 and beta = 1
            for (std::size_t a = 0; a <= d; ++a) {
                const double g = f.z ? tp[a] : 1.0 - tp[a];
                h0[a] = g;
            }
            for (std::size_t a = 0; a <= d; ++a) {
                const double g = f.z ? tp[a + 1] : 1.0 - tp[a + 1];
                h1[a] = g;
            }
            h0[d + 1] = h1[d + 1] = 0.0;
            // walk slots from the back; F offsets retreat in lockstep
            std::size_t foff = off;
            for (std::size_t s = d; s-- > 0;) {
                const double m1 = kern.dot(prefix.data() + foff, h1.data(), s + 1);
                const double m0 = kern.dot(prefix.data() + foff, h0.data(), s + 1);
                const double sum = m0 + m1;
                if (!(sum > 0.0) || !std::isfinite(sum)) {
                    throw std::runtime_error("bp_decode: factor message underflow");
                }
                // clamp so that a zero-probability branch stays finite
                f.msg_out[s] =
                    std::clamp(std::log(m1 / sum) - std::log(m0 / sum), -40.0, 40.0);
                kern.likelihood_fold(h0.data(), d + 1, f.msg_in[s]);
                kern.likelihood_fold(h1.data(), d + 1, f.msg_in[s]);
                foff -= s;  // F_{s-1} starts s doubles earlier
            }
        }

        // ---- device pass ----
        double max_change = 0.0;
        for (std::size_t i = 0; i < ell; ++i) {
            if (dev_adj[i].empty()) {
                res.marginals[i] = prior;  // stays at the prior exactly
                continue;
            }
            double total = prior_logit;
            for (auto [fi, s] : dev_adj[i]) total += factors[fi].msg_out[s];
            const double marg = sigmoid(total);
            if (!std::isfinite(total) && !std::isfinite(marg)) {
                throw std::runtime_error("bp_decode: non-finite marginal");
            }
            max_change = std::max(max_change, std::abs(marg - prev_marg[i]));
            prev_marg[i] = marg;
            res.marginals[i] = marg;
            for (auto [fi, s] : dev_adj[i]) {
                auto& f = factors[fi];
                const double target = sigmoid(total - f.msg_out[s]);
                f.msg_in[s] = (1.0 - opts.damping) * target + opts.damping * f.msg_in[s];
            }
        }
        res.iterations = iter + 1;
        if (max_change < opts.tol) {
            res.converged = true;
            break;
        }
    }

    for (double m : res.marginals) {
        if (!(m >= 0.0 && m <= 1.0)) throw std::runtime_error("bp_decode: marginal outside [0,1]");
    }
    res.estimated_set = top_k_by_score(res.marginals, k_target);
    return res;
}

DecodeResult ncomp_decode(const PreambleMatrix& pre, const std::vector<std::uint8_t>& z,
                          std::size_t k_target, double match_threshold) {
    if (z.size() != pre.cols) throw std::invalid_argument("ncomp_decode: z length != preamble cols");
    if (k_target > pre.rows) throw std::invalid_argument("ncomp_decode: k_target > device count");

    std::vector<double> rank(pre.rows);
    DecodeResult res;
    res.marginals.assign(pre.rows, 0.0);
    for (std::size_t i = 0; i < pre.rows; ++i) {
        std::size_t on = 0, hits = 0;
        for (std::size_t t = 0; t < pre.cols; ++t) {
            if (pre.bit(i, t)) {
                ++on;
                hits += z[t];
            }
        }
        const double score = on == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(on);
        res.marginals[i] = score;
        // qualifying devices sort strictly above non-qualifying ones
        rank[i] = score >= match_threshold ? 1.0 + score : score;
    }
    res.estimated_set = top_k_by_score(rank, k_target);
    res.converged = true;
    res.iterations = 1;
    return res;
}

std::vector<std::size_t> ml_oracle_decode(const PreambleMatrix& pre,
                                          const std::vector<std::uint8_t>& z, std::size_t k,
                                          double gamma, const ChannelConfig& cfg) {
    if (z.size() != pre.cols) throw std::invalid_argument("ml_oracle_decode: z length mismatch");
    if (k > pre.rows) throw std::invalid_argument("ml_oracle_decode: k > device count");
    if (log_choose(static_cast<int>(pre.rows), static_cast<int>(k)) > std::log(1e6)) {
        throw std::invalid_argument("ml_oracle_decode: C(ell,k) exceeds 10^6 guard");
    }
    cfg.validate();
    if (k == 0) return {};

    std::vector<double> logp1(k + 1), logp0(k + 1);
    for (std::size_t v = 0; v <= k; ++v) {
        const double p = transition_prob(static_cast<int>(v), {gamma}, cfg);
        logp1[v] = std::log(p);
        logp0[v] = std::log1p(-p);
    }

    std::vector<std::size_t> subset(k);
    std::iota(subset.begin(), subset.end(), 0);
    std::vector<std::size_t> best = subset;
    double best_ll = -std::numeric_limits<double>::infinity();
    std::vector<int> weight(pre.cols);

    for (;;) {
        std::fill(weight.begin(), weight.end(), 0);
        for (std::size_t i : subset) {
            for (std::size_t t = 0; t < pre.cols; ++t) weight[t] += pre.bit(i, t);
        }
        double ll = 0.0;
        for (std::size_t t = 0; t < pre.cols; ++t) {
            ll += z[t] ? logp1[static_cast<std::size_t>(weight[t])]
                       : logp0[static_cast<std::size_t>(weight[t])];
        }
        if (ll > best_ll) {  // strict: first (lexicographic) maximizer wins
            best_ll = ll;
            best = subset;
        }
        // next k-combination of {0..rows-1} in lexicographic order
        std::size_t pos = k;
        while (pos-- > 0) {
            if (subset[pos] != pre.rows - k + pos) break;
            if (pos == 0) return best;
        }
        if (subset[pos] == pre.rows - k + pos) return best;
        ++subset[pos];
        for (std::size_t j = pos + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
    }
}

}  // namespace mnac::codec
