#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mnac/bench.hpp"
#include "mnac/rng.hpp"

namespace {

using mnac::bench::ExperimentConfig;

void add_common_flags(CLI::App* cmd, ExperimentConfig& cfg, std::string& decoder,
                      std::string& out, bool& svg) {
    cmd->add_option("--ell", cfg.ell, "total device count");
    cmd->add_option("--k", cfg.k, "active device count");
    cmd->add_option("--snr-db", cfg.snr_db, "uplink SNR in dB");
    cmd->add_option("--eta1", cfg.eta1, "stage-1 partial recovery rate, percent");
    cmd->add_option("--stages", cfg.stages, "number of stages");
    cmd->add_option("--decoder", decoder, "bp|ncomp")->check(CLI::IsMember({"bp", "ncomp"}));
    cmd->add_option("--trials", cfg.trials_search, "trials per candidate budget");
    cmd->add_option("--trials-final", cfg.trials_final, "trials at the found budget");
    cmd->add_option("--eps", cfg.eps, "success-probability target");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--out", out, "output CSV path (stdout when empty)");
    cmd->add_option("--n-val", cfg.n_val_override, "validation block length override");
    cmd->add_flag("--fast,!--physics", cfg.fast, "Bernoulli shortcut vs full physics path");
    cmd->add_flag("--validate-final", cfg.validate_final, "validate the final estimate too");
    cmd->add_flag("--include-feedback", cfg.include_feedback, "count feedback in totals");
    cmd->add_flag("--svg", svg, "emit SVG plots instead of gnuplot files");
}

int write_sweep(const mnac::bench::SweepResult& res, const std::string& out,
                const std::string& title, bool svg) {
    const std::string csv = mnac::bench::to_csv(res);
    if (out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream f(out);
        if (!f) {
            std::cerr << "cannot write " << out << "\n";
            return 1;
        }
        f << csv;
        f.close();
        mnac::bench::emit_plot(out, title, svg);
    }
    return mnac::bench::any_unachievable(res) ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-coherent many-access identification lab"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    std::string decoder = "bp", out;
    bool svg = false;
    long budget = -1;

    auto* c_theory = app.add_subcommand("theory", "capacity point and cost bounds");
    auto* c_snr = app.add_subcommand("sweep-snr", "required uses vs SNR");
    auto* c_eta = app.add_subcommand("sweep-eta", "required uses vs stage-1 recovery rate");
    auto* c_k = app.add_subcommand("sweep-k", "required uses vs active count");
    auto* c_once = app.add_subcommand("run-once", "single protocol run, stage-by-stage trace");
    for (auto* c : {c_theory, c_snr, c_eta, c_k, c_once}) {
        add_common_flags(c, cfg, decoder, out, svg);
    }
    c_snr->add_option("--snr-grid", cfg.snr_db_grid, "SNR grid in dB")->delimiter(',');
    c_eta->add_option("--eta-grid", cfg.eta_grid, "eta1 grid in percent")->delimiter(',');
    c_k->add_option("--k-grid", cfg.k_grid, "k grid")->delimiter(',');
    c_once->add_option("--budget", budget, "total joint channel-uses (default 1.2x theory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    cfg.decoder = decoder == "ncomp" ? mnac::protocol::Decoder::NCOMP : mnac::protocol::Decoder::BP;

    try {
        if (c_theory->parsed()) {
            const auto ch = mnac::bench::channel_from_snr_db(cfg.snr_db);
            const auto cap = mnac::theory::optimize_capacity(static_cast<int>(cfg.k), ch);
            const double cost = mnac::theory::min_id_cost(static_cast<int>(cfg.ell),
                                                          static_cast<int>(cfg.k), cap);
            const double gval = mnac::theory::symmetric_validation_threshold(ch);
            const auto err = mnac::theory::validation_errors(gval, ch);
            const int n_val = mnac::theory::chernoff_test_length(
                static_cast<int>(cfg.k), err, 1e-2 / std::max(cfg.stages, 1));
            const long n_fb = mnac::theory::feedback_overhead(
                {static_cast<int>(cfg.k)}, {static_cast<int>(cfg.ell)},
                mnac::theory::gaussian_fb_capacity(ch.snr()));
            std::ostream* os = &std::cout;
            std::ofstream f;
            if (!out.empty()) {
                f.open(out);
                if (!f) throw std::runtime_error("cannot write " + out);
                os = &f;
            }
            *os << "# mnac theory ell=" << cfg.ell << " k=" << cfg.k
                << " snr_db=" << cfg.snr_db << " stages=" << cfg.stages << "\n";
            *os << "quantity,value\n";
            *os << "capacity_bits_per_use," << cap.rate << "\n";
            *os << "gamma_opt," << cap.gamma << "\n";
            *os << "q_opt," << cap.q << "\n";
            *os << "min_id_cost_uses," << cost << "\n";
            *os << "gamma_val," << gval << "\n";
            *os << "validation_p01," << err.p01 << "\n";
            *os << "validation_p10," << err.p10 << "\n";
            *os << "n_val_default," << n_val << "\n";
            *os << "feedback_uses_single_stage," << n_fb << "\n";
            return 0;
        }
        if (c_snr->parsed()) {
            return write_sweep(mnac::bench::sweep_snr(cfg), out, "identification cost vs SNR",
                               svg);
        }
        if (c_eta->parsed()) {
            return write_sweep(mnac::bench::sweep_eta(cfg), out,
                               "identification cost vs stage-1 recovery rate", svg);
        }
        if (c_k->parsed()) {
            return write_sweep(mnac::bench::sweep_k(cfg), out,
                               "identification cost vs active count", svg);
        }
        // run-once
        const auto ch = mnac::bench::channel_from_snr_db(cfg.snr_db);
        if (budget < 0) {
            budget = std::lround(std::ceil(1.2 * mnac::theory::min_id_cost(
                                                     static_cast<int>(cfg.ell),
                                                     static_cast<int>(cfg.k), ch)));
        }
        const auto plans = mnac::bench::build_plans(cfg.ell, cfg.k, cfg.stages, cfg.eta1,
                                                    cfg.decoder, ch, budget, cfg.n_val_override);
        mnac::protocol::ProtocolOptions popts;
        popts.fast = cfg.fast;
        popts.validate_final = cfg.validate_final;
        popts.c_fb = mnac::theory::gaussian_fb_capacity(ch.snr());
        const auto trace = mnac::protocol::run_protocol(plans, cfg.ell, cfg.k, ch, cfg.seed,
                                                        popts);
        const std::string csv = mnac::bench::trace_to_csv(trace);
        if (out.empty()) {
            std::cout << csv;
        } else {
            std::ofstream f(out);
            if (!f) throw std::runtime_error("cannot write " + out);
            f << csv;
        }
        return 0;
    } catch (const mnac::bench::Unachievable& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
