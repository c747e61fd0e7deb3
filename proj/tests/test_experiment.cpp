#include <set>

#include <gtest/gtest.h>

#include "mfsim/experiment.hpp"

using namespace mfsim;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("mfsim_test_" + name);
    fs::remove_all(p);
    return p;
}

ExperimentOptions tiny(std::size_t steps = 40'000) {
    ExperimentOptions o;
    o.seed = 5;
    o.rounds = 2;
    o.steps_per_round = steps;
    return o;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) m[fs::relative(e.path(), root).string()] = read_text(e.path());
    return m;
}

} // namespace

TEST(Presets, Definitions) {
    using F = FamilyKind;
    for (const auto& c : make_preset("case1").combos) {
        EXPECT_NE(c.left, F::studentqg);
        EXPECT_NE(c.right, F::studentqg);
    }
    EXPECT_EQ(make_preset("case1").combos.size(), 4u);
    for (const auto& c : make_preset("case2").combos) EXPECT_EQ(c.right, F::studentqg);
    for (const auto& c : make_preset("case3").combos) EXPECT_EQ(c.left, F::studentqg);
    EXPECT_EQ(make_preset("case1").alpha_x, (std::vector<double>{1.1, 1.3, 1.5, 1.7, 1.9}));
    EXPECT_EQ(make_preset("table1").dts, (std::vector<std::size_t>{1, 2, 4, 8, 16}));
    const auto g = make_preset("grid");
    EXPECT_EQ(g.alpha_x.size(), 11u);
    EXPECT_EQ(g.hurst.size(), 9u);
    EXPECT_DOUBLE_EQ(g.alpha_x.front(), 0.9);
    EXPECT_DOUBLE_EQ(g.hurst.back(), 0.9);
    EXPECT_THROW(make_preset("nope"), domain_error);
}

TEST(Presets, CellExpansion) {
    ExperimentOptions o;
    const auto cells = expand_cells(make_preset("case1"), o);
    ASSERT_EQ(cells.size(), 20u);
    EXPECT_EQ(cells.front().name, "ax1.1_hs0.8_DE_G");
    EXPECT_EQ(cells.front().config.rounds, 4u);
    std::set<std::uint64_t> seeds;
    for (const auto& c : cells) seeds.insert(c.config.seed);
    EXPECT_EQ(seeds.size(), cells.size());
    o.full = true;
    EXPECT_EQ(expand_cells(make_preset("standard"), o).front().config.rounds, 20u);
    o.rounds = 3;
    EXPECT_EQ(expand_cells(make_preset("standard"), o).front().config.rounds, 3u);
}

TEST(Experiment, StandardWritesAllAggregationLevels) {
    const auto dir = scratch_dir("standard");
    const auto report = run_experiment(make_preset("standard"), tiny(), dir);
    EXPECT_EQ(report.exit_status(), 0);
    const auto cell = dir / "ax1.3_hs0.8_qG_qG";
    for (int dt : {1, 2, 4, 8, 16}) EXPECT_TRUE(fs::exists(cell / ("returns_dt" + std::to_string(dt) + ".csv"))) << dt;
    for (const char* f : {"config.ini", "summary.json", "tail_fits.csv", "distribution_fits.csv"}) EXPECT_TRUE(fs::exists(cell / f)) << f;
    EXPECT_TRUE(fs::exists(dir / "summary.json"));
    EXPECT_TRUE(fs::exists(dir / "table1.csv"));

    const auto s = json::parse(read_text(cell / "summary.json"));
    ASSERT_EQ(s["dt"].size(), 5u);
    EXPECT_TRUE(s["dt"][0]["tail"]["positive"].contains("alpha"));
    EXPECT_TRUE(s["dt"][0]["tail"]["negative"].contains("alpha"));

    // The persisted config reproduces the cell.
    const auto cfg = parse_run_config(read_text(cell / "config.ini"));
    EXPECT_EQ(cfg.steps_per_round, 40'000u);
    EXPECT_EQ(cfg.rounds, 2u);

    // Twelve significant digits, one value per line.
    const auto first = read_text(cell / "returns_dt1.csv").substr(0, read_text(cell / "returns_dt1.csv").find('\n'));
    EXPECT_EQ(first, fmt12(std::stod(first)));
}

TEST(Experiment, ByteIdenticalReruns) {
    const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
    auto o = tiny(20'000);
    o.alpha_x = std::vector<double>{1.1, 1.5};
    run_experiment(make_preset("case3"), o, a);
    o.jobs = 3;
    run_experiment(make_preset("case3"), o, b);
    const auto ta = tree_contents(a), tb = tree_contents(b);
    EXPECT_EQ(ta.size(), tb.size());
    EXPECT_TRUE(ta == tb);
}

TEST(Experiment, GridSubsetWithSurface) {
    const auto dir = scratch_dir("grid");
    auto o = tiny(20'000);
    o.alpha_x = std::vector<double>{1.1, 1.5, 1.9};
    o.hurst = std::vector<double>{0.3, 0.6, 0.9};
    const auto report = run_experiment(make_preset("grid"), o, dir);
    EXPECT_EQ(report.cells.size(), 9u);
    const auto top = json::parse(read_text(dir / "summary.json"));
    EXPECT_EQ(top["cells"].size(), 9u);
    // Every cell reports an |g| exponent or the reason it could not be fitted.
    for (const auto& c : report.cells) {
        const auto& t = c.summary["dt"][0]["tail"]["absolute"];
        EXPECT_TRUE(t.contains("alpha") || t.contains("error")) << c.spec.name;
    }
    const auto& s = top["cross_cell"]["surface"];
    EXPECT_TRUE(s.contains("c1") || s.contains("error"));
}

TEST(Experiment, CaseOneCellsCarryVerdicts) {
    const auto dir = scratch_dir("case1");
    const auto report = run_experiment(make_preset("case1"), tiny(20'000), dir);
    ASSERT_EQ(report.cells.size(), 20u);
    const auto top = json::parse(read_text(dir / "summary.json"));
    for (const auto& c : top["cells"]) EXPECT_TRUE(c["power_law_dt1"].is_boolean()) << c["name"];
    EXPECT_EQ(top["cross_cell"]["collapse"].size(), 4u);

    const auto files = emit_plot_data(dir, "fig1");
    std::size_t a_files = 0;
    for (const auto& f : files) a_files += f.filename().string().rfind("a_abs_r_", 0) == 0;
    EXPECT_EQ(a_files, 20u);
    EXPECT_THROW(emit_plot_data(dir, "fig4"), error);
}

TEST(PlotData, FiguresFourAndFive) {
    const auto dir = scratch_dir("plots");
    run_experiment(make_preset("table1"), tiny(), dir);
    const auto before = read_text(dir / "summary.json");

    const auto f4 = emit_plot_data(dir, "fig4");
    std::set<std::string> names4;
    for (const auto& f : f4) names4.insert(f.filename().string());
    EXPECT_TRUE(names4.count("density_dt1.dat"));
    EXPECT_TRUE(names4.count("student_fit_dt1.dat"));

    const auto f5 = emit_plot_data(dir, "fig5");
    std::size_t dens = 0, tails = 0;
    for (const auto& f : f5) {
        const auto n = f.filename().string();
        dens += n.rfind("density_", 0) == 0;
        tails += n.rfind("ccdf_", 0) == 0;
    }
    EXPECT_EQ(dens, 5u);
    EXPECT_EQ(tails, 10u);

    // Two columns per line.
    std::istringstream in(read_text(dir / "plot" / "fig5" / "ccdf_pos_dt1.dat"));
    std::string line;
    ASSERT_TRUE(std::getline(in, line));
    std::istringstream ls(line);
    double x, y;
    EXPECT_TRUE(ls >> x >> y);
    EXPECT_EQ(read_text(dir / "summary.json"), before);
}

TEST(PlotData, MissingResults) {
    const auto dir = scratch_dir("empty");
    fs::create_directories(dir);
    EXPECT_THROW(emit_plot_data(dir, "fig4"), error);
    EXPECT_THROW(emit_plot_data(dir, "fig9"), error);
}

TEST(SimulationFiles, RoundTrip) {
    const auto dir = scratch_dir("sim");
    RunConfig cfg;
    cfg.steps_per_round = 20'000;
    cfg.rounds = 2;
    const auto series = run_simulation(cfg);
    write_simulation(dir, cfg, series);
    const auto [cfg2, loaded] = load_simulation(dir);
    EXPECT_EQ(format_run_config(cfg2), format_run_config(cfg));
    ASSERT_EQ(loaded.rounds.size(), 2u);
    EXPECT_EQ(loaded.round_counts[1].trades, series.round_counts[1].trades);
    for (std::size_t i = 0; i < series.rounds[0].size(); ++i) ASSERT_EQ(loaded.rounds[0][i], std::stod(fmt12(series.rounds[0][i])));
}
