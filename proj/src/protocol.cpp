#include "mnac/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mnac::protocol {

void StagePlan::validate(bool final_stage) const {
    if (!(eta > 0.0 && eta <= 100.0)) throw std::invalid_argument("StagePlan: eta in (0,100]");
    if (final_stage && eta != 100.0) throw std::invalid_argument("StagePlan: final eta must be 100");
    if (n_joint < 0) throw std::invalid_argument("StagePlan: n_joint must be >= 0");
    if (n_val < 0 || n_val % 2 != 0) throw std::invalid_argument("StagePlan: n_val must be even and >= 0");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("StagePlan: q in [0,1]");
    if (!(gamma_joint >= 0.0) || !(gamma_val >= 0.0)) {
        throw std::invalid_argument("StagePlan: thresholds must be >= 0");
    }
    if (!(ncomp_threshold >= 0.0 && ncomp_threshold <= 1.0)) {
        throw std::invalid_argument("StagePlan: ncomp_threshold in [0,1]");
    }
}

std::vector<std::size_t> ActivityState::unclassified() const {
    std::vector<std::size_t> s2;
    for (std::size_t i = 0; i < ell; ++i) {
        if (status[i] == DeviceStatus::Unclassified) s2.push_back(i);
    }
    return s2;
}

std::size_t ActivityState::k_operational() const {
    return validated_count >= k ? 0 : k - validated_count;
}

void ActivityState::check() const {
    if (truth.size() != ell || status.size() != ell) {
        throw std::invalid_argument("ActivityState: mask length mismatch");
    }
    std::size_t actives = 0, validated = 0, pend = 0;
    for (std::size_t i = 0; i < ell; ++i) {
        actives += truth[i];
        validated += status[i] == DeviceStatus::Validated;
        pend += status[i] == DeviceStatus::Pending;
    }
    if (actives != k) throw std::invalid_argument("ActivityState: |truth| != k");
    if (validated != validated_count) throw std::invalid_argument("ActivityState: validated count drift");
    if (pend != pending.size()) throw std::invalid_argument("ActivityState: pending count drift");
    for (std::size_t i : pending) {
        if (i >= ell || status[i] != DeviceStatus::Pending) {
            throw std::invalid_argument("ActivityState: pending entry not marked Pending");
        }
    }
    if (!std::is_sorted(pending.begin(), pending.end())) {
        throw std::invalid_argument("ActivityState: pending not ascending");
    }
}

theory::CostBreakdown RunTrace::total() const {
    theory::CostBreakdown t;
    for (const auto& s : stages) {
        t.joint_uses += s.cost.joint_uses;
        t.validation_uses += s.cost.validation_uses;
        t.feedback_uses += s.cost.feedback_uses;
    }
    return t;
}

std::size_t RunTrace::false_accepts() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.false_accepts;
    return n;
}

std::size_t RunTrace::false_rejects() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.false_rejects;
    return n;
}

bool majority_validate(const std::vector<std::uint8_t>& z_block) {
    if (z_block.size() % 2 != 0) {
        throw std::invalid_argument("majority_validate: block length must be even");
    }
    const std::size_t weight =
        static_cast<std::size_t>(std::count(z_block.begin(), z_block.end(), std::uint8_t{1}));
    return 2 * weight > z_block.size();  // strict majority; tie means inactive
}

bool check_partial_recovery(const std::vector<std::size_t>& truth_subset,
                            const std::vector<std::size_t>& estimate, double eta,
                            std::size_t k_j) {
    if (estimate.size() != k_j) {
        throw std::invalid_argument("check_partial_recovery: |estimate| != k_j");
    }
    std::vector<std::size_t> a = truth_subset, e = estimate, missed;
    std::sort(a.begin(), a.end());
    std::sort(e.begin(), e.end());
    std::set_difference(a.begin(), a.end(), e.begin(), e.end(), std::back_inserter(missed));
    return static_cast<double>(missed.size()) <=
           static_cast<double>(k_j) * (1.0 - eta / 100.0) + 1e-9;
}

namespace {

// Internal variant of run_stage with control over feedback charging; the
// final stage of a run charges no feedback (there is no next stage to seed).
StageTrace run_stage_impl(ActivityState& state, const StagePlan& plan, const ChannelConfig& cfg,
                          Rng& rng, const ProtocolOptions& opts, bool charge_feedback) {
    state.check();
    StageTrace trace;

    // ---- validation phase over the previous estimate, ascending blocks ----
    if (!state.pending.empty() && plan.n_val > 0) {
        for (std::size_t i : state.pending) {
            std::vector<std::uint8_t> block(static_cast<std::size_t>(plan.n_val));
            for (auto& b : block) {
                b = simulate_symbol(state.truth[i], {plan.gamma_val}, cfg, rng, opts.fast) ? 1 : 0;
            }
            const bool accept = majority_validate(block);
            if (accept) {
                state.status[i] = DeviceStatus::Validated;
                ++state.validated_count;
                ++trace.accepted;
                if (!state.truth[i]) ++trace.false_accepts;
            } else {
                state.status[i] = DeviceStatus::Rejected;
                ++trace.rejected;
                if (state.truth[i]) ++trace.false_rejects;
            }
        }
        trace.cost.validation_uses =
            static_cast<double>(state.pending.size()) * static_cast<double>(plan.n_val);
    } else if (!state.pending.empty()) {
        // zero-length blocks carry no evidence; everything is rejected
        for (std::size_t i : state.pending) {
            state.status[i] = DeviceStatus::Rejected;
            ++trace.rejected;
            if (state.truth[i]) ++trace.false_rejects;
        }
    }
    state.pending.clear();

    // ---- joint transmission over the unclassified set ----
    const auto s2 = state.unclassified();
    const std::size_t k_j = state.k_operational();
    trace.k_before = k_j;
    const std::size_t k_target = std::min(k_j, s2.size());

    std::vector<std::size_t> estimate;
    if (plan.n_joint > 0 && !s2.empty()) {
        trace.cost.joint_uses = static_cast<double>(plan.n_joint);
        const auto pre = codec::gen_preambles(s2.size(), static_cast<std::size_t>(plan.n_joint),
                                              plan.q, rng.next_u64());
        std::vector<std::uint8_t> mask(s2.size());
        for (std::size_t r = 0; r < s2.size(); ++r) mask[r] = state.truth[s2[r]];
        const auto z = simulate_block(pre.bits.data(), pre.rows, pre.cols, mask,
                                      {plan.gamma_joint}, cfg, rng, opts.fast);
        codec::DecodeResult dec;
        if (plan.decoder == Decoder::BP) {
            dec = codec::bp_decode(pre, z, k_target, plan.gamma_joint, cfg, opts.decode);
        } else {
            dec = codec::ncomp_decode(pre, z, k_target, plan.ncomp_threshold);
        }
        trace.decoder_iterations = dec.iterations;
        trace.decoder_converged = dec.converged;
        estimate.reserve(dec.estimated_set.size());
        for (std::size_t local : dec.estimated_set) estimate.push_back(s2[local]);
    } else if (!s2.empty() && k_target > 0) {
        // no observations: tie-break order, the k_target lowest indices
        estimate.assign(s2.begin(), s2.begin() + static_cast<std::ptrdiff_t>(k_target));
    }
    trace.estimate_size = estimate.size();

    // ---- ground-truth bookkeeping ----
    std::vector<std::size_t> a_j;
    for (std::size_t i : s2) {
        if (state.truth[i]) a_j.push_back(i);
    }
    std::vector<std::size_t> missed;
    std::set_difference(a_j.begin(), a_j.end(), estimate.begin(), estimate.end(),
                        std::back_inserter(missed));
    trace.misdetections = missed.size();
    trace.partial_success = static_cast<double>(missed.size()) <=
                            static_cast<double>(k_j) * (1.0 - plan.eta / 100.0) + 1e-9;

    // ---- feedback: estimate becomes the next stage's S1 ----
    for (std::size_t i : estimate) state.status[i] = DeviceStatus::Pending;
    state.pending = std::move(estimate);
    if (charge_feedback && k_target > 0 && s2.size() >= 3) {
        trace.cost.feedback_uses = static_cast<double>(theory::feedback_overhead(
            {static_cast<int>(k_target)}, {static_cast<int>(s2.size())}, opts.c_fb));
    }
    return trace;
}

}  // namespace

StageTrace run_stage(ActivityState& state, const StagePlan& plan, const ChannelConfig& cfg,
                     Rng& rng, const ProtocolOptions& opts) {
    return run_stage_impl(state, plan, cfg, rng, opts, true);
}

RunTrace run_protocol(const std::vector<StagePlan>& plans, std::size_t ell, std::size_t k,
                      const ChannelConfig& cfg, std::uint64_t seed, const ProtocolOptions& opts) {
    if (plans.empty()) throw std::invalid_argument("run_protocol: need at least one stage");
    if (k > ell) throw std::invalid_argument("run_protocol: k > ell");
    cfg.validate();
    for (std::size_t j = 0; j < plans.size(); ++j) plans[j].validate(j + 1 == plans.size());
    if (!(opts.c_fb > 0.0)) throw std::invalid_argument("run_protocol: c_fb must be > 0");

    Rng rng(seed);
    ActivityState state;
    state.ell = ell;
    state.k = k;
    state.truth.assign(ell, 0);
    state.status.assign(ell, DeviceStatus::Unclassified);
    // uniform k-subset via partial Fisher-Yates
    std::vector<std::size_t> idx(ell);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng.below(ell - j));
        std::swap(idx[j], idx[pick]);
        state.truth[idx[j]] = 1;
    }

    RunTrace trace;
    for (std::size_t j = 0; j < plans.size(); ++j) {
        const bool last = j + 1 == plans.size();
        const bool feedback = !last || opts.validate_final;
        trace.stages.push_back(run_stage_impl(state, plans[j], cfg, rng, opts, feedback));
    }

    if (opts.validate_final && !state.pending.empty()) {
        // extra validation round on the final estimate, charged to the last stage
        const auto& plan = plans.back();
        auto& last = trace.stages.back();
        for (std::size_t i : state.pending) {
            std::vector<std::uint8_t> block(static_cast<std::size_t>(plan.n_val));
            for (auto& b : block) {
                b = simulate_symbol(state.truth[i], {plan.gamma_val}, cfg, rng, opts.fast) ? 1 : 0;
            }
            if (majority_validate(block)) {
                state.status[i] = DeviceStatus::Validated;
                ++state.validated_count;
                ++last.accepted;
                if (!state.truth[i]) ++last.false_accepts;
            } else {
                state.status[i] = DeviceStatus::Rejected;
                ++last.rejected;
                if (state.truth[i]) ++last.false_rejects;
            }
        }
        last.cost.validation_uses +=
            static_cast<double>(state.pending.size()) * static_cast<double>(plan.n_val);
        state.pending.clear();
    }

    for (std::size_t i = 0; i < ell; ++i) {
        if (state.status[i] == DeviceStatus::Validated || state.status[i] == DeviceStatus::Pending) {
            trace.final_estimate.push_back(i);
        }
    }
    bool exact = trace.final_estimate.size() == k;
    if (exact) {
        for (std::size_t i : trace.final_estimate) exact = exact && state.truth[i];
    }
    for (const auto& s : trace.stages) exact = exact && s.partial_success;
    trace.exact_success = exact;
    return trace;
}

}  // namespace mnac::protocol
