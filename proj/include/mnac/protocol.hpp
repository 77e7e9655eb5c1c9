#pragma once

#include <cstdint>
#include <vector>

#include "mnac/channel.hpp"
#include "mnac/codec.hpp"
#include "mnac/theory.hpp"

namespace mnac::protocol {

enum class Decoder { BP, NCOMP };

// Per-stage budgets and operating point. n_val is the per-device validation
// block length used on the previous stage's estimate; stage 1 carges none.
struct StagePlan {
    double eta = 100.0;      // partial-recovery rate, percent; final stage must be 100
    long n_joint = 0;        // joint transmission uses
    int n_val = 0;           // per-device validation uses, even
    double q = 0.5;          // sampling probability of the joint phase
    double gamma_joint = 1.0;
    double gamma_val = 1.0;
    Decoder decoder = Decoder::BP;
    double ncomp_threshold = 0.5;

    void validate(bool final_stage) const;
};

struct ProtocolOptions {
    bool fast = true;           // Bernoulli channel shortcut vs full physics
    bool validate_final = false;  // extra validation round on the last estimate
    double c_fb = 1.0;          // feedback-link capacity, bits per use
    codec::DecodeOptions decode;
};

enum class DeviceStatus : std::uint8_t { Unclassified, Pending, Validated, Rejected };

// All sets are device-index sets over {0..ell-1}. A rejected device never
// transmits again; pending devices are the previous stage's estimate awaiting
// validation.
struct ActivityState {
    std::size_t ell = 0;
    std::size_t k = 0;
    std::vector<std::uint8_t> truth;        // activity mask, length ell
    std::vector<DeviceStatus> status;       // per-device lifecycle
    std::vector<std::size_t> pending;       // current S1, ascending
    std::size_t validated_count = 0;

    std::vector<std::size_t> unclassified() const;  // current S2, ascending
    std::size_t k_operational() const;  // BS view: k minus accepted count
    void check() const;                 // throws on inconsistency
};

struct StageTrace {
    theory::CostBreakdown cost;
    std::size_t k_before = 0;      // operational k_j entering the joint phase
    std::size_t estimate_size = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t false_accepts = 0;  // inactive devices passing validation
    std::size_t false_rejects = 0;  // active devices failing validation
    std::size_t misdetections = 0;  // |A_j \ estimate| of the joint phase
    bool partial_success = false;
    int decoder_iterations = 0;
    bool decoder_converged = false;
};

struct RunTrace {
    std::vector<StageTrace> stages;
    std::vector<std::size_t> final_estimate;  // ascending
    bool exact_success = false;
    theory::CostBreakdown total() const;
    std::size_t false_accepts() const;
    std::size_t false_rejects() const;
};

// Strict majority: active iff Hamming weight > len/2; an exact tie on the
// even-length block counts as inactive.
bool majority_validate(const std::vector<std::uint8_t>& z_block);

// True iff |truth_subset \ estimate| <= k_j * (1 - eta/100).
bool check_partial_recovery(const std::vector<std::size_t>& truth_subset,
                            const std::vector<std::size_t>& estimate, double eta, std::size_t k_j);

// One stage: validate the pending estimate over per-device blocks, run the
// joint phase over the unclassified set, decode a new partial estimate and
// charge its feedback share. Mutates state, returns the stage's trace entry.
StageTrace run_stage(ActivityState& state, const StagePlan& plan, const ChannelConfig& cfg,
                     Rng& rng, const ProtocolOptions& opts);

// Full m-stage run: draws the active set uniformly, iterates run_stage,
// reports exact success (final estimate equals the truth and every stage met
// its partial-recovery budget). Deterministic given the seed.
RunTrace run_protocol(const std::vector<StagePlan>& plans, std::size_t ell, std::size_t k,
                      const ChannelConfig& cfg, std::uint64_t seed, const ProtocolOptions& opts);

}  // namespace mnac::protocol
