#include "mnac/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mnac/rng.hpp"

namespace mnac::bench {

namespace {

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

const char* decoder_name(protocol::Decoder d) {
    return d == protocol::Decoder::BP ? "bp" : "ncomp";
}

std::string scheme_name(int stages, protocol::Decoder d) {
    if (stages == 1) return std::string("single-") + decoder_name(d);
    if (stages == 2) return std::string("two-stage-") + decoder_name(d);
    return std::to_string(stages) + "-stage-" + decoder_name(d);
}

// Everything about a scheme's plans except the joint budget split.
struct PlanTemplate {
    std::vector<protocol::StagePlan> base;  // n_joint left at 0
    std::vector<double> weights;            // theoretical per-stage cost share
};

PlanTemplate make_template(std::size_t ell, std::size_t k, int stages, double eta1,
                           protocol::Decoder decoder, const ChannelConfig& cfg,
                           int n_val_override) {
    if (stages < 1) throw std::invalid_argument("build_plans: stages must be >= 1");
    if (!(ell > k && k >= 1)) throw std::invalid_argument("build_plans: need ell > k >= 1");

    const double gamma_val = theory::symmetric_validation_threshold(cfg);
    const auto errors = theory::validation_errors(gamma_val, cfg);

    PlanTemplate tpl;
    std::size_t k_pred = k;       // actives remaining entering the stage
    std::size_t ell_pred = ell;   // unclassified devices entering the stage
    std::size_t prev_estimate = 0;
    for (int j = 1; j <= stages; ++j) {
        const bool final_stage = j == stages;
        protocol::StagePlan plan;
        plan.eta = final_stage ? 100.0 : eta1;
        plan.decoder = decoder;
        plan.gamma_val = gamma_val;
        if (j > 1) {
            plan.n_val = n_val_override >= 0
                             ? n_val_override + (n_val_override % 2)
                             : theory::chernoff_test_length(static_cast<int>(prev_estimate),
                                                            errors, 1e-2 / stages);
        }
        const auto cap = theory::optimize_capacity(static_cast<int>(std::max<std::size_t>(k_pred, 1)), cfg);
        plan.q = cap.q;
        plan.gamma_joint = cap.gamma;
        // NCOMP comparator threshold from the expected single-device miss rate
        const double p10 = 1.0 - transition_prob(1, {plan.gamma_joint}, cfg);
        plan.ncomp_threshold = std::clamp(1.0 - 2.0 * p10, 0.5, 1.0);

        const std::size_t captured =
            final_stage ? k_pred
                        : static_cast<std::size_t>(std::lround(k_pred * plan.eta / 100.0));
        tpl.weights.push_back(k_pred == 0 ? 0.0
                                          : static_cast<double>(captured) *
                                                std::log2(static_cast<double>(ell_pred)) /
                                                cap.rate);
        tpl.base.push_back(plan);

        prev_estimate = k_pred;  // stage j's estimate has size k_j
        ell_pred -= std::min(ell_pred, k_pred);
        k_pred -= std::min(k_pred, captured);
    }
    return tpl;
}

std::vector<protocol::StagePlan> with_budget(const PlanTemplate& tpl, long n_total) {
    if (n_total < 0) throw std::invalid_argument("build_plans: budget must be >= 0");
    std::vector<protocol::StagePlan> plans = tpl.base;
    const double wsum = std::accumulate(tpl.weights.begin(), tpl.weights.end(), 0.0);
    long assigned = 0;
    for (std::size_t j = 0; j < plans.size(); ++j) {
        long share;
        if (j + 1 == plans.size()) {
            share = n_total - assigned;
        } else {
            share = wsum > 0.0 ? std::lround(n_total * tpl.weights[j] / wsum) : 0;
            share = std::clamp(share, long{0}, n_total - assigned);
        }
        plans[j].n_joint = share;
        assigned += share;
    }
    return plans;
}

struct PointEval {
    long budget = 0;
    theory::CostBreakdown mean;
    double success = 0.0;
    double halfwidth = 0.0;
    bool unachievable = false;
};

PointEval evaluate_point(const ExperimentConfig& cfg, std::size_t ell, std::size_t k, int stages,
                         double eta1, double snr_db, std::uint64_t point_seed) {
    const ChannelConfig ch = channel_from_snr_db(snr_db);
    protocol::ProtocolOptions popts;
    popts.fast = cfg.fast;
    popts.validate_final = cfg.validate_final;
    popts.c_fb = theory::gaussian_fb_capacity(ch.snr());

    const PlanTemplate tpl = make_template(ell, k, stages, eta1, cfg.decoder, ch,
                                           cfg.n_val_override);
    Scenario run = [&](long n, std::uint64_t trial_seed) {
        return protocol::run_protocol(with_budget(tpl, n), ell, k, ch, trial_seed, popts);
    };

    PointEval ev;
    try {
        ev.budget = find_min_budget(run, cfg.eps, cfg.trials_search, point_seed);
    } catch (const Unachievable&) {
        ev.unachievable = true;
        return ev;
    }

    int succ = 0;
    for (int i = 0; i < cfg.trials_final; ++i) {
        const auto trace = run(ev.budget, Rng::derive(point_seed, (1ull << 20) + i));
        if (trace.exact_success) ++succ;
        const auto t = trace.total();
        ev.mean.joint_uses += t.joint_uses;
        ev.mean.validation_uses += t.validation_uses;
        ev.mean.feedback_uses += t.feedback_uses;
    }
    const double n = cfg.trials_final;
    ev.mean.joint_uses /= n;
    ev.mean.validation_uses /= n;
    ev.mean.feedback_uses /= n;
    ev.success = succ / n;
    ev.halfwidth = 1.96 * std::sqrt(std::max(ev.success * (1.0 - ev.success), 0.0) / n);
    return ev;
}

SweepRow make_row(const ExperimentConfig& cfg, const std::string& scheme, double axis,
                  const PointEval& ev, double theory_min) {
    SweepRow row;
    row.scheme = scheme;
    row.axis = axis;
    row.theory_min = theory_min;
    row.unachievable = ev.unachievable;
    if (!ev.unachievable) {
        row.joint_uses = ev.mean.joint_uses;
        row.validation_uses = ev.mean.validation_uses;
        row.feedback_uses = ev.mean.feedback_uses;
        row.total_uses = row.joint_uses + row.validation_uses +
                         (cfg.include_feedback ? row.feedback_uses : 0.0);
        row.success_rate = ev.success;
        row.ci_halfwidth = ev.halfwidth;
        row.flagged = ev.halfwidth > 0.05;
    } else {
        row.flagged = true;
    }
    return row;
}

std::vector<std::string> config_meta(const ExperimentConfig& cfg, const std::string& sweep) {
    std::ostringstream grids;
    grids << "# snr_db_grid=";
    for (std::size_t i = 0; i < cfg.snr_db_grid.size(); ++i) {
        grids << (i ? ";" : "") << num(cfg.snr_db_grid[i]);
    }
    grids << " eta_grid=";
    for (std::size_t i = 0; i < cfg.eta_grid.size(); ++i) {
        grids << (i ? ";" : "") << num(cfg.eta_grid[i]);
    }
    grids << " k_grid=";
    for (std::size_t i = 0; i < cfg.k_grid.size(); ++i) {
        grids << (i ? ";" : "") << cfg.k_grid[i];
    }
    std::ostringstream line;
    line << "# ell=" << cfg.ell << " k=" << cfg.k << " snr_db=" << num(cfg.snr_db)
         << " eta1=" << num(cfg.eta1) << " stages=" << cfg.stages
         << " decoder=" << decoder_name(cfg.decoder) << " trials_search=" << cfg.trials_search
         << " trials_final=" << cfg.trials_final << " eps=" << num(cfg.eps)
         << " seed=" << cfg.seed << " fast=" << cfg.fast
         << " validate_final=" << cfg.validate_final
         << " include_feedback=" << cfg.include_feedback
         << " n_val_override=" << cfg.n_val_override;
    return {"# mnac " + sweep + " sweep", line.str(), grids.str()};
}

}  // namespace

ChannelConfig channel_from_snr_db(double snr_db) {
    ChannelConfig cfg;
    cfg.noise_var = 1.0;
    cfg.fading_var = 1.0;
    cfg.on_power = std::pow(10.0, snr_db / 10.0);
    return cfg;
}

void ExperimentConfig::validate() const {
    if (!(ell > k && k >= 1)) throw std::invalid_argument("ExperimentConfig: need ell > k >= 1");
    if (trials_search < 1 || trials_final < 1) {
        throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
    }
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("ExperimentConfig: eps in (0,1)");
    if (stages < 1) throw std::invalid_argument("ExperimentConfig: stages must be >= 1");
    if (snr_db_grid.empty() || eta_grid.empty() || k_grid.empty()) {
        throw std::invalid_argument("ExperimentConfig: grids must be non-empty");
    }
}

std::vector<protocol::StagePlan> build_plans(std::size_t ell, std::size_t k, int stages,
                                             double eta1, protocol::Decoder decoder,
                                             const ChannelConfig& cfg, long n_joint_total,
                                             int n_val_override) {
    return with_budget(make_template(ell, k, stages, eta1, decoder, cfg, n_val_override),
                       n_joint_total);
}

long find_min_budget(const Scenario& run, double eps, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("find_min_budget: trials must be >= 1");
    constexpr long kCap = 1l << 16;
    if (eps <= 0.0) return 1;  // degenerate target: the minimum probe succeeds vacuously

    const int need = static_cast<int>(std::ceil(eps * trials - 1e-9));
    auto success_at = [&](long n) {
        int succ = 0, fail = 0;
        for (int i = 0; i < trials; ++i) {
            if (run(n, Rng::derive(seed, static_cast<std::uint64_t>(i))).exact_success) {
                if (++succ >= need) return true;
            } else if (++fail > trials - need) {
                return false;
            }
        }
        return succ >= need;
    };

    long lo = 0, hi = 16;
    while (!success_at(hi)) {
        lo = hi;
        if (hi >= kCap) throw Unachievable("find_min_budget: target not reached at gallop cap");
        hi = std::min(kCap, hi * 2);
    }
    // lo fails, hi succeeds; these bracketing evaluations double as the
    // monotonicity spot check
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        (success_at(mid) ? hi : lo) = mid;
    }
    return hi;
}

SweepResult sweep_snr(const ExperimentConfig& cfg) {
    cfg.validate();
    SweepResult res;
    res.axis_name = "snr_db";
    res.meta = config_meta(cfg, "snr");

    std::vector<int> stage_counts = {1};
    if (cfg.stages > 1) stage_counts.push_back(cfg.stages);

    std::uint64_t point = 0;
    for (double snr_db : cfg.snr_db_grid) {
        const double tmin = theory::min_id_cost(static_cast<int>(cfg.ell), static_cast<int>(cfg.k),
                                                channel_from_snr_db(snr_db));
        for (int stages : stage_counts) {
            const auto ev = evaluate_point(cfg, cfg.ell, cfg.k, stages, cfg.eta1, snr_db,
                                           Rng::derive(cfg.seed, point++));
            res.rows.push_back(
                make_row(cfg, scheme_name(stages, cfg.decoder), snr_db, ev, tmin));
        }
    }
    return res;
}

SweepResult sweep_eta(const ExperimentConfig& cfg) {
    cfg.validate();
    SweepResult res;
    res.axis_name = "eta1";
    res.meta = config_meta(cfg, "eta");

    const double tmin = theory::min_id_cost(static_cast<int>(cfg.ell), static_cast<int>(cfg.k),
                                            channel_from_snr_db(cfg.snr_db));
    std::uint64_t point = 0;
    const auto single = evaluate_point(cfg, cfg.ell, cfg.k, 1, 100.0, cfg.snr_db,
                                       Rng::derive(cfg.seed, point++));
    res.rows.push_back(make_row(cfg, scheme_name(1, cfg.decoder), 0.0, single, tmin));

    const int stages = std::max(cfg.stages, 2);
    double best_total = 0.0, best_eta = 0.0;
    bool have_best = false;
    for (double eta : cfg.eta_grid) {
        const auto ev = evaluate_point(cfg, cfg.ell, cfg.k, stages, eta, cfg.snr_db,
                                       Rng::derive(cfg.seed, point++));
        const auto row = make_row(cfg, scheme_name(stages, cfg.decoder), eta, ev, tmin);
        if (!row.unachievable && (!have_best || row.total_uses < best_total)) {
            best_total = row.total_uses;
            best_eta = eta;
            have_best = true;
        }
        res.rows.push_back(row);
    }
    if (have_best) res.meta.push_back("# argmin_eta1=" + num(best_eta));
    return res;
}

SweepResult sweep_k(const ExperimentConfig& cfg) {
    cfg.validate();
    SweepResult res;
    res.axis_name = "k";
    res.meta = config_meta(cfg, "k");

    std::vector<int> stage_counts = {1};
    if (cfg.stages > 1) stage_counts.push_back(cfg.stages);

    std::uint64_t point = 0;
    for (std::size_t k : cfg.k_grid) {
        const double tmin = theory::min_id_cost(static_cast<int>(cfg.ell), static_cast<int>(k),
                                                channel_from_snr_db(cfg.snr_db));
        for (int stages : stage_counts) {
            const auto ev = evaluate_point(cfg, cfg.ell, k, stages, cfg.eta1, cfg.snr_db,
                                           Rng::derive(cfg.seed, point++));
            res.rows.push_back(make_row(cfg, scheme_name(stages, cfg.decoder),
                                        static_cast<double>(k), ev, tmin));
        }
    }
    return res;
}

std::string to_csv(const SweepResult& result) {
    std::ostringstream out;
    for (const auto& m : result.meta) out << m << "\n";
    out << "# axis=" << result.axis_name << "\n";
    out << "scheme,axis,joint_uses,validation_uses,feedback_uses,total_uses,success_rate,"
           "ci_halfwidth,theory_min_cost,flagged,unachievable\n";
    for (const auto& r : result.rows) {
        out << r.scheme << "," << num(r.axis) << "," << num(r.joint_uses) << ","
            << num(r.validation_uses) << "," << num(r.feedback_uses) << "," << num(r.total_uses)
            << "," << num(r.success_rate) << "," << num(r.ci_halfwidth) << ","
            << num(r.theory_min) << "," << (r.flagged ? 1 : 0) << ","
            << (r.unachievable ? 1 : 0) << "\n";
    }
    return out.str();
}

bool any_unachievable(const SweepResult& result) {
    return std::any_of(result.rows.begin(), result.rows.end(),
                       [](const SweepRow& r) { return r.unachievable; });
}

std::string trace_to_csv(const protocol::RunTrace& trace) {
    std::ostringstream out;
    out << "stage,joint_uses,validation_uses,feedback_uses,accepted,rejected,false_accepts,"
           "false_rejects,misdetections,partial_success\n";
    for (std::size_t j = 0; j < trace.stages.size(); ++j) {
        const auto& s = trace.stages[j];
        out << (j + 1) << "," << num(s.cost.joint_uses) << "," << num(s.cost.validation_uses)
            << "," << num(s.cost.feedback_uses) << "," << s.accepted << "," << s.rejected << ","
            << s.false_accepts << "," << s.false_rejects << "," << s.misdetections << ","
            << (s.partial_success ? 1 : 0) << "\n";
    }
    const auto t = trace.total();
    out << "summary," << num(t.joint_uses) << "," << num(t.validation_uses) << ","
        << num(t.feedback_uses) << "," << num(t.total()) << ",exact_success="
        << (trace.exact_success ? 1 : 0) << ",estimate_size=" << trace.final_estimate.size()
        << "\n";
    return out.str();
}

namespace {

struct ParsedCsv {
    std::string axis_name = "axis";
    // scheme -> (axis, total) in file order; map keeps scheme blocks sorted
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
    std::vector<std::pair<double, double>> theory;
};

ParsedCsv parse_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("emit_plot: cannot open " + path);
    ParsedCsv parsed;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.rfind("# axis=", 0) == 0) {
            parsed.axis_name = line.substr(7);
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column header row
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 11) continue;
        const double axis = std::stod(cells[1]);
        const double total = std::stod(cells[5]);
        const double tmin = std::stod(cells[8]);
        auto it = std::find_if(parsed.series.begin(), parsed.series.end(),
                               [&](const auto& s) { return s.first == cells[0]; });
        if (it == parsed.series.end()) {
            parsed.series.push_back({cells[0], {}});
            it = std::prev(parsed.series.end());
        }
        it->second.emplace_back(axis, total);
        if (std::none_of(parsed.theory.begin(), parsed.theory.end(),
                         [&](const auto& p) { return p.first == axis; })) {
            parsed.theory.emplace_back(axis, tmin);
        }
    }
    return parsed;
}

void emit_svg(const std::string& path, const ParsedCsv& p, const std::string& title) {
    constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool any = false;
    auto grow = [&](double x, double y) {
        if (!any) {
            xmin = xmax = x;
            ymin = ymax = y;
            any = true;
        } else {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    };
    for (const auto& s : p.series) {
        for (auto [x, y] : s.second) grow(x, y);
    }
    for (auto [x, y] : p.theory) grow(x, y);
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto sx = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto sy = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << title << "</text>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\""
        << H - B << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">" << p.axis_name << "</text>\n";
    out << "<text x=\"16\" y=\"" << H / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << H / 2
        << ")\">channel-uses</text>\n";
    std::size_t ci = 0;
    auto draw = [&](const std::vector<std::pair<double, double>>& pts, const std::string& name,
                    const char* color, const char* dash) {
        if (pts.empty()) return;
        out << "<polyline fill=\"none\" stroke=\"" << color << "\"" << dash << " points=\"";
        for (auto [x, y] : pts) out << num(sx(x)) << "," << num(sy(y)) << " ";
        out << "\"/>\n";
        out << "<text x=\"" << W - R - 4 << "\" y=\"" << num(T + 16.0 * (ci + 1))
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << name
            << "</text>\n";
    };
    for (const auto& s : p.series) {
        draw(s.second, s.first, palette[ci % 5], "");
        ++ci;
    }
    draw(p.theory, "theory", "#555555", " stroke-dasharray=\"5,3\"");
    out << "</svg>\n";
    std::ofstream(path) << out.str();
}

}  // namespace

void emit_plot(const std::string& csv_path, const std::string& title, bool svg) {
    const ParsedCsv parsed = parse_sweep_csv(csv_path);
    if (svg) {
        emit_svg(csv_path + ".svg", parsed, title);
        return;
    }
    std::ostringstream dat;
    std::size_t blocks = 0;
    for (const auto& s : parsed.series) {
        dat << "# " << s.first << "\n";
        for (auto [x, y] : s.second) dat << num(x) << " " << num(y) << "\n";
        dat << "\n\n";
        ++blocks;
    }
    dat << "# theory\n";
    for (auto [x, y] : parsed.theory) dat << num(x) << " " << num(y) << "\n";
    std::ofstream(csv_path + ".dat") << dat.str();

    std::ostringstream gp;
    gp << "set title '" << title << "'\n";
    gp << "set xlabel '" << parsed.axis_name << "'\n";
    gp << "set ylabel 'channel-uses'\n";
    gp << "set key top left\n";
    if (parsed.series.empty() && parsed.theory.empty()) {
        gp << "set xrange [0:1]\nset yrange [0:1]\nplot NaN notitle\n";
    } else {
        gp << "plot ";
        std::size_t i = 0;
        for (const auto& s : parsed.series) {
            gp << "'" << csv_path << ".dat' index " << i << " with linespoints title '"
               << s.first << "', ";
            ++i;
        }
        gp << "'" << csv_path << ".dat' index " << blocks
           << " with lines dashtype 2 title 'theory'\n";
    }
    std::ofstream(csv_path + ".gp") << gp.str();
}

}  // namespace mnac::bench
