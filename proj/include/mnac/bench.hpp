#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mnac/protocol.hpp"
#include "mnac/theory.hpp"

namespace mnac::bench {

struct Unachievable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Declared normalization: sigma_w^2 = 1, sigma^2 = 1, P = 10^(dB/10).
ChannelConfig channel_from_snr_db(double snr_db);

struct ExperimentConfig {
    std::size_t ell = 1000;
    std::size_t k = 20;
    std::vector<double> snr_db_grid = {0, 4, 8, 10, 12, 16};
    std::vector<double> eta_grid = {50, 60, 70, 80, 90};
    std::vector<std::size_t> k_grid = {10, 20, 30, 40, 50};
    double snr_db = 10.0;  // operating point for the eta and k sweeps
    double eta1 = 75.0;
    int stages = 2;
    protocol::Decoder decoder = protocol::Decoder::BP;
    int trials_search = 200;   // per candidate budget during the search
    int trials_final = 1000;   // at the returned budget
    double eps = 0.9;          // success-probability target
    std::uint64_t seed = 1;
    bool fast = true;
    bool validate_final = false;
    bool include_feedback = false;  // whether totals include the feedback column
    int n_val_override = -1;        // -1 keeps the Chernoff default

    void validate() const;
};

// Stage plans for an m-stage run at a given total joint budget; the budget is
// split across stages by the theoretical per-stage cost ratio
// k_j log2(ell_j) / C(k_j). Per-stage (gamma, q) from optimize_capacity,
// gamma_val at the symmetric point, n_val from chernoff_test_length with
// target 10^-2/m unless overridden.
std::vector<protocol::StagePlan> build_plans(std::size_t ell, std::size_t k, int stages,
                                             double eta1, protocol::Decoder decoder,
                                             const ChannelConfig& cfg, long n_joint_total,
                                             int n_val_override = -1);

// Runs one protocol instance at a candidate total joint budget.
using Scenario = std::function<protocol::RunTrace(long n_joint_total, std::uint64_t trial_seed)>;

// Smallest total joint budget whose empirical exact-success rate over
// `trials` runs reaches eps: galloping upper bound (cap 2^16) then binary
// search, with the bracketing evaluations retained as the monotonicity spot
// check. Throws Unachievable at the cap. eps <= 0 returns the minimum probe.
long find_min_budget(const Scenario& run, double eps, int trials, std::uint64_t seed);

struct SweepRow {
    std::string scheme;
    double axis = 0.0;
    double joint_uses = 0.0;
    double validation_uses = 0.0;
    double feedback_uses = 0.0;
    double total_uses = 0.0;  // respects include_feedback
    double success_rate = 0.0;
    double ci_halfwidth = 0.0;  // normal approximation, 1.96 sigma
    double theory_min = 0.0;
    bool flagged = false;  // halfwidth above 0.05
    bool unachievable = false;
};

struct SweepResult {
    std::string axis_name;
    std::vector<std::string> meta;  // '#'-prefixed lines: full config and seed
    std::vector<SweepRow> rows;
};

SweepResult sweep_snr(const ExperimentConfig& cfg);  // single- vs m-stage over SNR
SweepResult sweep_eta(const ExperimentConfig& cfg);  // two-stage over eta1, plus single-stage
SweepResult sweep_k(const ExperimentConfig& cfg);    // single- vs m-stage over k

std::string to_csv(const SweepResult& result);
bool any_unachievable(const SweepResult& result);

// Gnuplot data + script pair next to the CSV, or a self-contained SVG.
// Reads the CSV back, so output is deterministic from the file alone.
void emit_plot(const std::string& csv_path, const std::string& title, bool svg);

// One row per stage plus a summary row:
// stage,joint_uses,validation_uses,feedback_uses,accepted,rejected,false_accepts,
// false_rejects,misdetections,partial_success followed by
// summary,<totals>,exact_success,<final estimate size>.
std::string trace_to_csv(const protocol::RunTrace& trace);

}  // namespace mnac::bench
