#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mnac/bench.hpp"

using namespace mnac;
using namespace mnac::bench;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.ell = 60;
    cfg.k = 3;
    cfg.snr_db = 18.0;
    cfg.snr_db_grid = {18.0};
    cfg.eta_grid = {60.0, 100.0};
    cfg.k_grid = {2, 3};
    cfg.eta1 = 60.0;
    cfg.stages = 2;
    cfg.trials_search = 25;
    cfg.trials_final = 40;
    cfg.seed = 9;
    return cfg;
}

}  // namespace

TEST_CASE("channel normalization from dB") {
    const auto ch = channel_from_snr_db(10.0);
    CHECK(ch.on_power == doctest::Approx(10.0));
    CHECK(ch.fading_var == 1.0);
    CHECK(ch.noise_var == 1.0);
    CHECK(ch.snr() == doctest::Approx(10.0));
    CHECK(channel_from_snr_db(0.0).snr() == doctest::Approx(1.0));
}

TEST_CASE("find_min_budget on a synthetic threshold scenario") {
    auto step_at = [](long threshold) {
        return [threshold](long n, std::uint64_t) {
            protocol::RunTrace t;
            t.exact_success = n >= threshold;
            return t;
        };
    };
    CHECK(find_min_budget(step_at(137), 0.9, 50, 1) == 137);
    CHECK(find_min_budget(step_at(1), 0.9, 50, 1) == 1);
    CHECK(find_min_budget(step_at(65536), 0.9, 10, 1) == 65536);
    CHECK(find_min_budget(step_at(5), 0.0, 50, 1) == 1);  // degenerate target
    CHECK_THROWS_AS(find_min_budget(step_at(70000), 0.9, 10, 1), Unachievable);
}

TEST_CASE("build_plans splits the budget and wires the stage structure") {
    const auto ch = channel_from_snr_db(10.0);
    const auto plans = build_plans(1000, 20, 2, 75.0, protocol::Decoder::BP, ch, 400);
    REQUIRE(plans.size() == 2);
    CHECK(plans[0].n_joint + plans[1].n_joint == 400);
    CHECK(plans[0].n_joint > plans[1].n_joint);  // stage 1 carries more devices
    CHECK(plans[0].n_val == 0);
    CHECK(plans[1].n_val > 0);
    CHECK(plans[1].n_val % 2 == 0);
    CHECK(plans[0].eta == 75.0);
    CHECK(plans[1].eta == 100.0);
    CHECK(plans[0].gamma_val == plans[1].gamma_val);
    CHECK(plans[0].q > 0.0);
    CHECK(plans[0].q < 0.2);

    const auto single = build_plans(1000, 20, 1, 100.0, protocol::Decoder::BP, ch, 400);
    REQUIRE(single.size() == 1);
    CHECK(single[0].n_joint == 400);
    CHECK(single[0].n_val == 0);

    const auto forced = build_plans(1000, 20, 2, 75.0, protocol::Decoder::BP, ch, 400, 8);
    CHECK(forced[1].n_val == 8);
    CHECK_THROWS_AS(build_plans(10, 10, 1, 100.0, protocol::Decoder::BP, ch, 100),
                    std::invalid_argument);
}

TEST_CASE("sweep CSV is deterministic and respects the converse column") {
    const auto cfg = tiny_config();
    const auto a = sweep_eta(cfg);
    const auto b = sweep_eta(cfg);
    CHECK(to_csv(a) == to_csv(b));

    for (const auto& row : a.rows) {
        if (row.unachievable) continue;
        CHECK(row.total_uses == row.joint_uses + row.validation_uses);  // feedback excluded
        CHECK(row.success_rate >= 0.0);
        CHECK(row.success_rate <= 1.0);
        CHECK(row.theory_min > 0.0);
    }
    CHECK(to_csv(a).find("# axis=eta1") != std::string::npos);
}

TEST_CASE("sweep_k emits both schemes per grid point") {
    auto cfg = tiny_config();
    cfg.k_grid = {2};
    const auto res = sweep_k(cfg);
    REQUIRE(res.rows.size() == 2);
    CHECK(res.rows[0].scheme == "single-bp");
    CHECK(res.rows[1].scheme == "two-stage-bp");
    CHECK(res.rows[0].axis == 2.0);
}

TEST_CASE("include_feedback toggle moves the feedback column into totals") {
    auto cfg = tiny_config();
    cfg.eta_grid = {60.0};
    cfg.include_feedback = true;
    const auto res = sweep_eta(cfg);
    for (const auto& row : res.rows) {
        if (row.unachievable) continue;
        CHECK(row.total_uses ==
              doctest::Approx(row.joint_uses + row.validation_uses + row.feedback_uses));
    }
}

TEST_CASE("emit_plot round-trips byte-identically") {
    const auto cfg = tiny_config();
    const auto res = sweep_eta(cfg);
    const std::string csv_path = "bench_test_sweep.csv";
    std::ofstream(csv_path) << to_csv(res);

    emit_plot(csv_path, "test", false);
    const std::string dat1 = slurp(csv_path + ".dat");
    const std::string gp1 = slurp(csv_path + ".gp");
    emit_plot(csv_path, "test", false);
    CHECK(slurp(csv_path + ".dat") == dat1);
    CHECK(slurp(csv_path + ".gp") == gp1);
    CHECK(!dat1.empty());
    CHECK(gp1.find("plot") != std::string::npos);

    emit_plot(csv_path, "test", true);
    const std::string svg1 = slurp(csv_path + ".svg");
    emit_plot(csv_path, "test", true);
    CHECK(slurp(csv_path + ".svg") == svg1);
    CHECK(svg1.find("<svg") != std::string::npos);
    CHECK(svg1.find("polyline") != std::string::npos);

    // empty CSV: axes-only output
    const std::string empty_path = "bench_test_empty.csv";
    {
        SweepResult empty;
        empty.axis_name = "snr_db";
        std::ofstream(empty_path) << to_csv(empty);
    }
    emit_plot(empty_path, "empty", false);
    CHECK(slurp(empty_path + ".gp").find("plot NaN notitle") != std::string::npos);

    for (const char* suffix : {"", ".dat", ".gp", ".svg"}) {
        std::remove((csv_path + suffix).c_str());
    }
    std::remove(empty_path.c_str());
    std::remove((empty_path + ".dat").c_str());
    std::remove((empty_path + ".gp").c_str());
}

TEST_CASE("trace serialization has one row per stage plus a summary") {
    protocol::RunTrace trace;
    trace.stages.resize(2);
    trace.stages[0].cost.joint_uses = 100;
    trace.stages[1].cost.validation_uses = 40;
    trace.exact_success = true;
    const auto csv = trace_to_csv(trace);
    int lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 4);  // header + 2 stages + summary
    CHECK(csv.find("exact_success=1") != std::string::npos);
}

TEST_CASE("config validation") {
    auto cfg = tiny_config();
    cfg.eps = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.k = cfg.ell;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.snr_db_grid.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
