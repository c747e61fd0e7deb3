// mfsim: command-line front end.
//
//   mfsim simulate   [--config F] [--seed N] [--rounds N] [--out DIR] [--jobs N] [--event-log F]
//   mfsim analyze    --in DIR [--out DIR] [--dt 1,2,4]
//   mfsim experiment <preset> [--seed N] [--rounds N] [--full] [--jobs N] [--out DIR]
//                    [--alpha-x a,b] [--hurst h,k] [--dt 1,2] [--steps N] [--config F]
//   mfsim plotdata   <figure> [--out DIR]

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mfsim/experiment.hpp"

namespace {

using namespace mfsim;

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::size_t rounds = 0;
    std::size_t steps = 0;
    unsigned jobs = 1;
    std::string out;
};

RunConfig base_config(const Common& c, CLI::App& sub) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
    if (sub.count("--seed")) cfg.seed = c.seed;
    if (sub.count("--rounds")) cfg.rounds = c.rounds;
    if (sub.count("--steps")) cfg.steps_per_round = c.steps;
    cfg.validate();
    return cfg;
}

int simulate(const Common& c, CLI::App& sub, const std::string& event_log) {
    const RunConfig cfg = base_config(c, sub);
    const auto series = run_simulation(cfg, c.jobs);
    write_simulation(c.out, cfg, series);
    if (!event_log.empty()) {
        // Replays round 0; rounds are seeded independently, so this is the
        // same event stream that produced mid_prices_r0.csv.
        std::ofstream os(event_log);
        if (!os) throw error("cannot write '" + event_log + "'");
        os << "t,kind,sign,price,n_tot\n";
        EventLog log(os);
        run_round(cfg, round_seed(cfg.seed, 0), &log);
    }
    const auto total = series.total_counts();
    std::cout << "rounds=" << series.rounds.size() << " trades=" << total.trades << " trade_fraction=" << fmt12(total.trade_fraction())
              << " -> " << c.out << "\n";
    return 0;
}

int analyze(const std::string& in, std::string out, const std::vector<std::size_t>& dts) {
    if (out.empty()) out = in;
    const auto [cfg, series] = load_simulation(in);
    const json summary = write_series_outputs(out, cfg, series, dts);
    for (const auto& d : summary["dt"]) {
        if (d.contains("error")) {
            std::cout << "dt=" << d["dt"] << " error: " << d["error"].get<std::string>() << "\n";
            continue;
        }
        std::cout << "dt=" << d["dt"] << " n=" << d["n"] << " kurtosis=" << d["kurtosis"].dump();
        for (const char* side : {"positive", "negative"})
            if (d["tail"][side].contains("alpha"))
                std::cout << " alpha_" << side << "=" << d["tail"][side]["alpha"].dump() << "+-" << d["tail"][side]["stderr"].dump();
        std::cout << "\n";
    }
    return 0;
}

int experiment(const std::string& preset_name, const Common& c, CLI::App& sub, bool full, const std::vector<double>& alphas,
               const std::vector<double>& hursts, const std::vector<std::size_t>& dts) {
    const auto preset = make_preset(preset_name);
    ExperimentOptions o;
    o.seed = c.seed;
    o.full = full;
    o.jobs = c.jobs;
    if (!c.config.empty()) o.base = load_run_config(c.config);
    if (sub.count("--rounds")) o.rounds = c.rounds;
    if (sub.count("--steps")) o.steps_per_round = c.steps;
    if (!alphas.empty()) o.alpha_x = alphas;
    if (!hursts.empty()) o.hurst = hursts;
    if (!dts.empty()) o.dts = dts;
    const auto report = run_experiment(preset, o, c.out);
    for (const auto& cell : report.summary["cells"]) {
        std::cout << cell["name"].get<std::string>();
        if (cell["ok"].get<bool>())
            std::cout << " kurtosis=" << cell["kurtosis_dt1"].dump() << " alpha_abs=" << cell["alpha_abs_dt1"].dump()
                      << " power_law=" << cell["power_law_dt1"].dump() << "\n";
        else
            std::cout << " FAILED: " << cell["error"].get<std::string>() << "\n";
    }
    const auto failed = report.failed();
    if (!failed.empty()) {
        std::cerr << failed.size() << " cell(s) failed:\n";
        for (const auto& f : failed) std::cerr << "  " << f << "\n";
    }
    std::cout << "results -> " << c.out << "\n";
    return report.exit_status();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Order-book simulation with long-memory order signs and heavy-tailed placement"};
    app.require_subcommand(1);
    Common c;
    std::string event_log, in, preset, figure;
    bool full = false;
    std::vector<double> alphas, hursts;
    std::vector<std::size_t> dts;

    auto add_run_flags = [&](CLI::App* s) {
        s->add_option("--config", c.config, "run config file")->check(CLI::ExistingFile);
        s->add_option("--seed", c.seed, "master seed");
        s->add_option("--rounds", c.rounds, "independent rounds")->check(CLI::PositiveNumber);
        s->add_option("--steps", c.steps, "steps per round")->check(CLI::PositiveNumber);
        s->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* sim = app.add_subcommand("simulate", "run a simulation and store mid-price series");
    add_run_flags(sim);
    sim->add_option("--out", c.out, "output directory")->default_val("sim");
    sim->add_option("--event-log", event_log, "CSV event log of round 0");

    auto* ana = app.add_subcommand("analyze", "aggregate and fit a stored simulation");
    ana->add_option("--in", in, "directory written by simulate")->required()->check(CLI::ExistingDirectory);
    ana->add_option("--out", c.out, "output directory (default: --in)");
    ana->add_option("--dt", dts, "aggregation windows")->delimiter(',')->default_str("1,2,4,8,16");

    auto* exp = app.add_subcommand("experiment", "run a preset: standard, table1, case1, case2, case3, grid");
    exp->add_option("preset", preset, "preset name")->required()->check(CLI::IsMember({"standard", "table1", "case1", "case2", "case3", "grid"}));
    add_run_flags(exp);
    exp->add_option("--out", c.out, "result directory")->default_val("results");
    exp->add_flag("--full", full, "full scale (20 rounds)");
    exp->add_option("--alpha-x", alphas, "override alpha_x list")->delimiter(',');
    exp->add_option("--hurst", hursts, "override H_s list")->delimiter(',');
    exp->add_option("--dt", dts, "override aggregation windows")->delimiter(',');

    auto* plot = app.add_subcommand("plotdata", "write plot-ready curves from stored results");
    plot->add_option("figure", figure, "fig1..fig5")->required()->check(CLI::IsMember(plot_figures()));
    plot->add_option("--out", c.out, "result directory")->default_val("results");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return simulate(c, *sim, event_log);
        if (*ana) return analyze(in, c.out, dts.empty() ? std::vector<std::size_t>{1, 2, 4, 8, 16} : dts);
        if (*exp) return experiment(preset, c, *exp, full, alphas, hursts, dts);
        if (*plot) {
            for (const auto& p : emit_plot_data(c.out, figure)) std::cout << p.string() << "\n";
            return 0;
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
