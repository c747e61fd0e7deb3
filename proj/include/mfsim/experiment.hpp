#pragma once

// Experiment presets and result persistence.
//
// A preset expands into cells, one per (f_L, f_R) combination x alpha_x x
// H_s. Each cell is a full multi-round simulation followed by the analysis
// pipeline; it writes into its own directory
//
//   ax<alpha_x>_hs<H_s>_<fL>_<fR>/
//     config.ini                  full run config (provenance)
//     returns_dt<k>.csv           standardized returns, one per line
//     summary.json                counts and per-dt statistics
//     tail_fits.csv               side,dt,alpha,stderr,lo,hi,n_in_range
//     distribution_fits.csv       dt,kurtosis,student_alpha,student_L
//
// and the preset writes a top-level summary.json with cross-cell statistics.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mfsim/analysis.hpp"
#include "mfsim/config.hpp"
#include "mfsim/engine.hpp"
#include "mfsim/format.hpp"

namespace mfsim {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Combination {
    FamilyKind left;
    FamilyKind right;
};

inline std::string combo_name(const Combination& c) {
    return std::string(short_name(c.left)) + "_" + std::string(short_name(c.right));
}

struct ExperimentPreset {
    std::string name;
    std::vector<Combination> combos;
    std::vector<double> alpha_x;
    std::vector<double> hurst;
    std::vector<std::size_t> dts;
};

inline std::vector<double> stepped(int from_tenths, int to_tenths, int step_tenths) {
    std::vector<double> v;
    for (int k = from_tenths; k <= to_tenths; k += step_tenths) v.push_back(k / 10.0);
    return v;
}

inline ExperimentPreset make_preset(std::string_view name) {
    using F = FamilyKind;
    const std::vector<std::size_t> table_dts{1, 2, 4, 8, 16};
    if (name == "standard" || name == "table1")
        return {std::string(name), {{F::studentqg, F::studentqg}}, {1.3}, {0.8}, table_dts};
    if (name == "case1")
        return {"case1",
                {{F::laplace, F::gaussian}, {F::laplace, F::laplace}, {F::gaussian, F::laplace}, {F::gaussian, F::gaussian}},
                stepped(11, 19, 2), {0.8}, {1}};
    if (name == "case2")
        return {"case2", {{F::laplace, F::studentqg}, {F::gaussian, F::studentqg}}, stepped(11, 19, 2), {0.8}, {1}};
    if (name == "case3")
        return {"case3", {{F::studentqg, F::laplace}, {F::studentqg, F::gaussian}}, stepped(11, 19, 2), {0.8}, {1}};
    if (name == "grid")
        return {"grid", {{F::studentqg, F::studentqg}}, stepped(9, 19, 1), stepped(1, 9, 1), {1}};
    throw domain_error("unknown preset '" + std::string(name) + "'");
}

/// Scaling ranges per aggregation level for the positive and negative tails.
struct TailRanges {
    ScalingRange positive;
    ScalingRange negative;
};

inline std::optional<TailRanges> table_scaling_range(std::size_t dt) {
    switch (dt) {
        case 1: return TailRanges{{1.5, 50.1}, {1.5, 39.8}};
        case 2: return TailRanges{{1.5, 36.3}, {1.5, 30.2}};
        case 4: return TailRanges{{1.5, 27.7}, {1.7, 22.9}};
        case 8: return TailRanges{{1.7, 15.8}, {1.7, 15.9}};
        case 16: return TailRanges{{1.7, 12.1}, {1.9, 7.6}};
        default: return std::nullopt;
    }
}

/// Range for the |g| exponent used by the grid and case studies.
inline constexpr ScalingRange absolute_tail_range{1.5, 50.1};

struct ExperimentOptions {
    std::uint64_t seed = 1;
    std::optional<std::size_t> rounds;
    std::optional<std::size_t> steps_per_round;
    bool full = false;
    unsigned jobs = 1;
    std::optional<std::vector<double>> alpha_x;
    std::optional<std::vector<double>> hurst;
    std::optional<std::vector<std::size_t>> dts;
    RunConfig base{};

    std::size_t effective_rounds() const { return rounds ? *rounds : (full ? 20 : 4); }
};

struct CellSpec {
    std::string name;
    Combination combo;
    double alpha_x;
    double hurst;
    RunConfig config;
};

inline std::string cell_name(double alpha_x, double hurst, const Combination& c) {
    return "ax" + fmt12(alpha_x) + "_hs" + fmt12(hurst) + "_" + combo_name(c);
}

inline std::uint64_t name_hash(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::vector<CellSpec> expand_cells(const ExperimentPreset& p, const ExperimentOptions& o) {
    const auto& alphas = o.alpha_x ? *o.alpha_x : p.alpha_x;
    const auto& hursts = o.hurst ? *o.hurst : p.hurst;
    std::vector<CellSpec> cells;
    for (const auto& c : p.combos)
        for (double h : hursts)
            for (double a : alphas) {
                RunConfig cfg = o.base;
                cfg.hurst = h;
                cfg.sampler = make_sampler_spec(c.left, c.right, a, o.base.sampler.sigma_x);
                cfg.rounds = o.effective_rounds();
                if (o.steps_per_round) cfg.steps_per_round = *o.steps_per_round;
                auto name = cell_name(a, h, c);
                // Seeds depend on the cell identity only, so a cell reproduces
                // regardless of which other cells run alongside it.
                cfg.seed = derive_seed(o.seed, name_hash(name), 17);
                cfg.validate();
                cells.push_back({std::move(name), c, a, h, cfg});
            }
    return cells;
}

// ---------------------------------------------------------------------------
// I/O helpers
// ---------------------------------------------------------------------------

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write '" + path.string() + "'");
    out << text;
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("missing results: cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_column(const fs::path& path, std::span<const double> v) {
    std::string s;
    s.reserve(v.size() * 16);
    for (double x : v) {
        s += fmt12(x);
        s += '\n';
    }
    write_text(path, s);
}

inline std::vector<double> read_column(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw error("missing results: cannot read '" + path.string() + "'");
    std::vector<double> v;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            v.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw data_error(path.string() + ":" + std::to_string(line_no) + ": not a number");
        }
    }
    return v;
}

inline void write_xy(const fs::path& path, const std::vector<std::pair<double, double>>& xy) {
    std::string s;
    for (const auto& [x, y] : xy) s += fmt12(x) + " " + fmt12(y) + "\n";
    write_text(path, s);
}

inline json num(double v) { return std::isfinite(v) ? json(round12(v)) : json(nullptr); }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Analysis of one return series
// ---------------------------------------------------------------------------

inline json tail_fit_json(const TailFit& f) {
    return json{{"alpha", num(f.exponent)}, {"stderr", num(f.standard_error)}, {"lo", num(f.range.lo)},
                {"hi", num(f.range.hi)}, {"n_in_range", f.n_in_range}};
}

template <class F>
json try_fit(F&& f) {
    try {
        return f();
    } catch (const data_error& e) {
        return json{{"error", e.what()}};
    }
}

/// Statistics for one aggregation level: moments, tail fits, Student fit
/// and the power-law verdict on |g|.
inline json analyze_returns(const AggregatedReturns& agg) {
    const auto& g = agg.standardized;
    json j;
    j["dt"] = agg.dt;
    j["n"] = g.size();
    j["mean"] = num(agg.mean);
    j["std"] = num(agg.stddev);
    j["kurtosis"] = try_fit([&] { return num(kurtosis(g)); });

    const auto ranges = table_scaling_range(agg.dt);
    json tails;
    tails["positive"] = try_fit([&] {
        return tail_fit_json(ranges ? fit_tail_exponent(g, ranges->positive, TailSide::positive)
                                    : fit_tail_exponent(g, TailSide::positive, 1.5));
    });
    tails["negative"] = try_fit([&] {
        return tail_fit_json(ranges ? fit_tail_exponent(g, ranges->negative, TailSide::negative)
                                    : fit_tail_exponent(g, TailSide::negative, 1.5));
    });
    tails["absolute"] = try_fit([&] { return tail_fit_json(fit_tail_exponent(g, absolute_tail_range, TailSide::absolute)); });
    j["tail"] = tails;

    j["student"] = try_fit([&] {
        const auto s = fit_student_density(g);
        return json{{"alpha", num(s.alpha)}, {"L", num(s.L)}, {"residual", num(s.residual)}, {"converged", s.converged}};
    });
    j["verdict"] = try_fit([&] {
        const auto v = power_law_verdict(g);
        return json{{"power_law", v.power_law}, {"curvature", num(v.curvature)}, {"pareto_rss", num(v.pareto_rss)},
                    {"exp_rss", num(v.exp_rss)}, {"lo", num(v.range.lo)}, {"hi", num(v.range.hi)}};
    });
    return j;
}

inline std::string tail_fits_csv(const json& dts) {
    std::string s = "side,dt,alpha,stderr,lo,hi,n_in_range\n";
    for (const auto& d : dts)
        for (const char* side : {"positive", "negative", "absolute"}) {
            const auto& t = d["tail"][side];
            if (t.contains("error")) continue;
            s += std::string(side) + "," + std::to_string(d["dt"].get<std::size_t>()) + "," + fmt12(t["alpha"].get<double>()) + ","
                 + fmt12(t["stderr"].get<double>()) + "," + fmt12(t["lo"].get<double>()) + "," + fmt12(t["hi"].get<double>()) + ","
                 + std::to_string(t["n_in_range"].get<std::size_t>()) + "\n";
        }
    return s;
}

inline std::string distribution_fits_csv(const json& dts) {
    auto field = [](const json& j, const char* k) -> std::string {
        return j.contains(k) && j[k].is_number() ? fmt12(j[k].get<double>()) : "nan";
    };
    std::string s = "dt,kurtosis,student_alpha,student_L\n";
    for (const auto& d : dts)
        s += std::to_string(d["dt"].get<std::size_t>()) + "," + (d["kurtosis"].is_number() ? fmt12(d["kurtosis"].get<double>()) : "nan")
             + "," + field(d["student"], "alpha") + "," + field(d["student"], "L") + "\n";
    return s;
}

inline json counts_json(const EventCounts& c) {
    return json{{"orders", c.orders}, {"trades", c.trades}, {"rested", c.rested}, {"canceled", c.canceled},
                {"trade_fraction", num(c.trade_fraction())}};
}

/// Writes returns, fits and summary for one simulated series into `dir`.
/// Returns the summary; `dt1_abs_g` and `dt1_abs_r` receive |g| and |r| at
/// dt = 1 when requested.
inline json write_series_outputs(const fs::path& dir, const RunConfig& cfg, const ReturnSeries& series,
                                 std::span<const std::size_t> dts, std::vector<double>* dt1_abs_g = nullptr,
                                 std::vector<double>* dt1_abs_r = nullptr) {
    fs::create_directories(dir);
    write_text(dir / "config.ini", format_run_config(cfg));

    json summary;
    summary["counts"] = counts_json(series.total_counts());
    json per_round = json::array();
    for (const auto& c : series.round_counts) per_round.push_back(num(c.trade_fraction()));
    summary["round_trade_fractions"] = per_round;

    json per_dt = json::array();
    for (std::size_t dt : dts) {
        json entry;
        try {
            const auto agg = aggregate_returns(series, dt);
            write_column(dir / ("returns_dt" + std::to_string(dt) + ".csv"), agg.standardized);
            entry = analyze_returns(agg);
            if (dt == 1 && dt1_abs_g) {
                dt1_abs_g->clear();
                for (double v : agg.standardized) dt1_abs_g->push_back(std::abs(v));
            }
            if (dt == 1 && dt1_abs_r) {
                dt1_abs_r->clear();
                for (double v : agg.raw) dt1_abs_r->push_back(std::abs(v));
            }
        } catch (const data_error& e) {
            entry = json{{"dt", dt}, {"error", e.what()}};
        }
        per_dt.push_back(entry);
    }
    summary["dt"] = per_dt;

    json ok_dts = json::array();
    for (const auto& d : per_dt)
        if (!d.contains("error")) ok_dts.push_back(d);
    write_text(dir / "tail_fits.csv", tail_fits_csv(ok_dts));
    write_text(dir / "distribution_fits.csv", distribution_fits_csv(ok_dts));
    write_text(dir / "summary.json", dump(summary));
    return summary;
}

// ---------------------------------------------------------------------------
// Raw simulation output (simulate / analyze)
// ---------------------------------------------------------------------------

/// Writes config.ini, counts.csv and mid_prices_r<k>.csv (one per round).
inline void write_simulation(const fs::path& dir, const RunConfig& cfg, const ReturnSeries& series) {
    fs::create_directories(dir);
    write_text(dir / "config.ini", format_run_config(cfg));
    std::string counts = "round,orders,trades,rested,canceled\n";
    for (std::size_t r = 0; r < series.rounds.size(); ++r) {
        const auto& c = series.round_counts[r];
        counts += std::to_string(r) + "," + std::to_string(c.orders) + "," + std::to_string(c.trades) + "," + std::to_string(c.rested)
                  + "," + std::to_string(c.canceled) + "\n";
        write_column(dir / ("mid_prices_r" + std::to_string(r) + ".csv"), series.rounds[r]);
    }
    write_text(dir / "counts.csv", counts);
}

/// Reads what write_simulation produced.
inline std::pair<RunConfig, ReturnSeries> load_simulation(const fs::path& dir) {
    const RunConfig cfg = parse_run_config(read_text(dir / "config.ini"));
    ReturnSeries series;
    std::istringstream counts(read_text(dir / "counts.csv"));
    std::string line;
    std::getline(counts, line);
    while (std::getline(counts, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t round = 0;
        EventCounts c;
        char comma;
        if (!(ls >> round >> comma >> c.orders >> comma >> c.trades >> comma >> c.rested >> comma >> c.canceled))
            throw data_error((dir / "counts.csv").string() + ": malformed record '" + line + "'");
        series.round_counts.push_back(c);
        series.rounds.push_back(read_column(dir / ("mid_prices_r" + std::to_string(round) + ".csv")));
    }
    if (series.rounds.empty()) throw data_error("missing results: no rounds in '" + dir.string() + "'");
    return {cfg, std::move(series)};
}

// ---------------------------------------------------------------------------
// Running a preset
// ---------------------------------------------------------------------------

struct CellResult {
    CellSpec spec;
    bool ok = false;
    std::string error;
    json summary;
    std::vector<double> abs_g;  ///< |g| at dt = 1
    std::vector<double> abs_r;  ///< |r| at dt = 1
};

struct ExperimentReport {
    ExperimentPreset preset;
    std::vector<CellResult> cells;
    json summary;

    std::vector<std::string> failed() const {
        std::vector<std::string> f;
        for (const auto& c : cells)
            if (!c.ok) f.push_back(c.spec.name + ": " + c.error);
        return f;
    }
    int exit_status() const { return failed().empty() ? 0 : 1; }
};

inline double dt1_number(const json& summary, std::initializer_list<const char*> path) {
    if (!summary.contains("dt") || summary["dt"].empty()) return NAN;
    const json* j = &summary["dt"][0];
    for (const char* k : path) {
        if (!j->is_object() || !j->contains(k)) return NAN;
        j = &(*j)[k];
    }
    return j->is_number() ? j->get<double>() : NAN;
}

/// Pairwise KS statistics among a set of samples: returns the maximum.
inline double max_pairwise_ks(const std::vector<const std::vector<double>*>& samples) {
    double worst = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j) worst = std::max(worst, ks_distance(*samples[i], *samples[j]));
    return worst;
}

inline json cross_cell_summary(const ExperimentPreset& preset, const std::vector<CellResult>& cells) {
    json out;
    // Collapse of |g| across alpha_x within each combination and H_s.
    if (preset.name == "case1" || preset.name == "case2" || preset.name == "case3") {
        json collapse = json::array();
        for (const auto& c : preset.combos) {
            std::map<double, std::vector<const std::vector<double>*>> by_h;
            for (const auto& cell : cells)
                if (cell.ok && combo_name(cell.spec.combo) == combo_name(c) && !cell.abs_g.empty())
                    by_h[cell.spec.hurst].push_back(&cell.abs_g);
            for (const auto& [h, group] : by_h)
                collapse.push_back({{"combination", combo_name(c)}, {"hurst", num(h)}, {"max_pairwise_ks", num(max_pairwise_ks(group))}});
        }
        out["collapse"] = collapse;
    }
    // Different f_R at matched alpha_x: KS between |r| distributions.
    if (preset.name == "case3" && preset.combos.size() == 2) {
        json cmp = json::array();
        for (const auto& a : cells)
            for (const auto& b : cells)
                if (a.ok && b.ok && combo_name(a.spec.combo) == combo_name(preset.combos[0])
                    && combo_name(b.spec.combo) == combo_name(preset.combos[1]) && a.spec.alpha_x == b.spec.alpha_x
                    && a.spec.hurst == b.spec.hurst && !a.abs_r.empty() && !b.abs_r.empty())
                    cmp.push_back({{"alpha_x", num(a.spec.alpha_x)}, {"hurst", num(a.spec.hurst)}, {"ks_abs_r", num(ks_distance(a.abs_r, b.abs_r))}});
        out["right_family_comparison"] = cmp;
    }
    if (preset.name == "grid") {
        std::vector<SurfacePoint> pts;
        for (const auto& c : cells) {
            const double a = dt1_number(c.summary, {"tail", "absolute", "alpha"});
            if (c.ok && std::isfinite(a)) pts.push_back({c.spec.alpha_x, c.spec.hurst, a});
        }
        out["surface"] = try_fit([&] {
            const auto s = regress_alpha_surface(pts);
            return json{{"c0", num(s.c0)}, {"c1", num(s.c1)}, {"c2", num(s.c2)}, {"c3", num(s.c3)}, {"r_squared", num(s.r_squared)}};
        });
    }
    return out;
}

inline std::string table1_csv(const json& summary) {
    std::string s = "dt,kurtosis,student_L,student_alpha,pos_lo,pos_hi,alpha_pos,stderr_pos,neg_lo,neg_hi,alpha_neg,stderr_neg\n";
    auto f = [](const json& j, std::initializer_list<const char*> path) -> std::string {
        const json* p = &j;
        for (const char* k : path) {
            if (!p->is_object() || !p->contains(k)) return "nan";
            p = &(*p)[k];
        }
        return p->is_number() ? fmt12(p->get<double>()) : "nan";
    };
    for (const auto& d : summary["dt"]) {
        if (d.contains("error")) continue;
        s += std::to_string(d["dt"].get<std::size_t>()) + "," + f(d, {"kurtosis"}) + "," + f(d, {"student", "L"}) + ","
             + f(d, {"student", "alpha"}) + "," + f(d, {"tail", "positive", "lo"}) + "," + f(d, {"tail", "positive", "hi"}) + ","
             + f(d, {"tail", "positive", "alpha"}) + "," + f(d, {"tail", "positive", "stderr"}) + ","
             + f(d, {"tail", "negative", "lo"}) + "," + f(d, {"tail", "negative", "hi"}) + ","
             + f(d, {"tail", "negative", "alpha"}) + "," + f(d, {"tail", "negative", "stderr"}) + "\n";
    }
    return s;
}

/// Runs every cell of a preset into `out_dir`. Cells run on up to
/// `options.jobs` threads; files are identical for any job count.
inline ExperimentReport run_experiment(const ExperimentPreset& preset, const ExperimentOptions& options, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    ExperimentReport report{preset, {}, {}};
    const auto specs = expand_cells(preset, options);
    const auto& dts = options.dts ? *options.dts : preset.dts;
    report.cells.resize(specs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < specs.size();) {
            auto& cell = report.cells[i];
            cell.spec = specs[i];
            try {
                const auto series = run_simulation(cell.spec.config, 1);
                cell.summary = write_series_outputs(out_dir / cell.spec.name, cell.spec.config, series, dts, &cell.abs_g, &cell.abs_r);
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(specs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    json top;
    top["preset"] = preset.name;
    top["seed"] = options.seed;
    top["rounds"] = options.effective_rounds();
    top["steps_per_round"] = specs.empty() ? options.base.steps_per_round : specs.front().config.steps_per_round;
    json dt_list = json::array();
    for (auto d : dts) dt_list.push_back(d);
    top["dts"] = dt_list;
    json cells = json::array();
    for (const auto& c : report.cells) {
        json j{{"name", c.spec.name}, {"left", to_string(c.spec.combo.left)}, {"right", to_string(c.spec.combo.right)},
               {"alpha_x", num(c.spec.alpha_x)}, {"hurst", num(c.spec.hurst)}, {"ok", c.ok}};
        if (!c.ok) {
            j["error"] = c.error;
        } else {
            j["trades"] = c.summary["counts"]["trades"];
            j["trade_fraction"] = c.summary["counts"]["trade_fraction"];
            j["kurtosis_dt1"] = num(dt1_number(c.summary, {"kurtosis"}));
            j["alpha_abs_dt1"] = num(dt1_number(c.summary, {"tail", "absolute", "alpha"}));
            j["alpha_abs_stderr_dt1"] = num(dt1_number(c.summary, {"tail", "absolute", "stderr"}));
            const auto& v = c.summary["dt"][0];
            j["power_law_dt1"] = v.contains("verdict") && v["verdict"].contains("power_law") ? v["verdict"]["power_law"] : json(nullptr);
        }
        cells.push_back(j);
    }
    top["cells"] = cells;
    top["cross_cell"] = cross_cell_summary(preset, report.cells);
    if ((preset.name == "table1" || preset.name == "standard") && report.cells.size() == 1 && report.cells[0].ok)
        write_text(out_dir / "table1.csv", table1_csv(report.cells[0].summary));
    json failed = json::array();
    for (const auto& f : report.failed()) failed.push_back(f);
    top["failed"] = failed;
    write_text(out_dir / "summary.json", dump(top));
    report.summary = top;
    return report;
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

/// CCDF points of positive magnitudes thinned to at most 25 per decade.
inline std::vector<std::pair<double, double>> ccdf_curve(std::span<const double> magnitudes) {
    std::vector<std::pair<double, double>> out;
    double last = -INFINITY;
    const double min_du = std::log(10.0) / 25.0;
    for (const auto& p : ccdf(magnitudes)) {
        if (!(p.value > 0)) continue;
        const double u = std::log(p.value);
        if (u - last < min_du) continue;
        last = u;
        out.emplace_back(p.value, p.probability);
    }
    return out;
}

inline std::vector<std::string> plot_figures() { return {"fig1", "fig2", "fig3", "fig4", "fig5"}; }

/// Writes two-column (x y) curve files for one figure into
/// `result_dir/plot/<figure>/`, from stored results only. Returns the paths.
inline std::vector<fs::path> emit_plot_data(const fs::path& result_dir, std::string_view figure) {
    const json top = json::parse(read_text(result_dir / "summary.json"));
    const std::string preset = top.value("preset", "");
    const fs::path out = result_dir / "plot" / std::string(figure);
    std::vector<fs::path> written;

    auto require = [&](std::initializer_list<const char*> allowed) {
        for (const char* a : allowed)
            if (preset == a) return;
        throw error("missing results: " + std::string(figure) + " needs a '" + std::string(*allowed.begin()) + "' run, found '" + preset + "'");
    };
    auto emit = [&](const std::string& file, const std::vector<std::pair<double, double>>& xy) {
        fs::create_directories(out);
        write_xy(out / file, xy);
        written.push_back(out / file);
    };
    auto load_cell = [&](const json& cell, std::size_t dt) {
        const fs::path dir = result_dir / cell["name"].get<std::string>();
        auto g = read_column(dir / ("returns_dt" + std::to_string(dt) + ".csv"));
        const json s = json::parse(read_text(dir / "summary.json"));
        double mean = 0, sd = 1;
        for (const auto& d : s["dt"])
            if (d["dt"].get<std::size_t>() == dt) {
                mean = d["mean"].get<double>();
                sd = d["std"].get<double>();
            }
        return std::tuple{std::move(g), mean, sd};
    };
    auto magnitudes = [](const std::vector<double>& v, double scale, double shift) {
        std::vector<double> m;
        m.reserve(v.size());
        for (double x : v) m.push_back(std::abs(x * scale + shift));
        return m;
    };

    if (figure == "fig1" || figure == "fig2" || figure == "fig3") {
        require({figure == "fig1" ? "case1" : figure == "fig2" ? "case2" : "case3"});
        for (const auto& cell : top["cells"]) {
            if (!cell["ok"].get<bool>()) continue;
            auto [g, mean, sd] = load_cell(cell, 1);
            const std::string tag = std::string(short_name(parse_family(cell["left"].get<std::string>()))) + "_"
                                    + std::string(short_name(parse_family(cell["right"].get<std::string>()))) + "_ax"
                                    + fmt12(cell["alpha_x"].get<double>()) + "_hs" + fmt12(cell["hurst"].get<double>());
            emit("a_abs_r_" + tag + ".dat", ccdf_curve(magnitudes(g, sd, mean)));
            if (figure != "fig3") emit("b_abs_g_" + tag + ".dat", ccdf_curve(magnitudes(g, 1.0, 0.0)));
        }
    } else if (figure == "fig4" || figure == "fig5") {
        if (figure == "fig4") require({"standard", "table1"});
        else require({"table1", "standard"});
        const auto& cell = top["cells"].at(0);
        const fs::path dir = result_dir / cell["name"].get<std::string>();
        const json s = json::parse(read_text(dir / "summary.json"));
        for (const auto& d : s["dt"]) {
            if (d.contains("error")) continue;
            const auto dt = d["dt"].get<std::size_t>();
            if (figure == "fig4" && dt != 1) continue;
            const auto g = read_column(dir / ("returns_dt" + std::to_string(dt) + ".csv"));
            const std::string sfx = "_dt" + std::to_string(dt) + ".dat";

            std::vector<std::pair<double, double>> dens;
            for (const auto& p : log_binned_density(g, 0.05))
                if (p.count > 0) dens.emplace_back(p.g, p.density);
            emit("density" + sfx, dens);

            std::vector<double> pos, neg;
            for (double v : g) {
                if (v > 0) pos.push_back(v);
                if (v < 0) neg.push_back(-v);
            }
            emit("ccdf_pos" + sfx, ccdf_curve(pos));
            emit("ccdf_neg" + sfx, ccdf_curve(neg));

            if (figure == "fig4") {
                if (d["student"].contains("alpha")) {
                    const double a = d["student"]["alpha"].get<double>(), L = d["student"]["L"].get<double>();
                    std::vector<std::pair<double, double>> curve;
                    for (int k = -400; k <= 400; ++k) {
                        const double x = k * 0.1;
                        curve.emplace_back(x, student_density(x, a, L));
                    }
                    emit("student_fit" + sfx, curve);
                }
                for (const char* side : {"positive", "negative"}) {
                    const auto& t = d["tail"][side];
                    if (!t.contains("alpha")) continue;
                    const auto& src = std::string(side) == "positive" ? pos : neg;
                    const double lo = t["lo"].get<double>(), hi = t["hi"].get<double>(), a = t["alpha"].get<double>();
                    const double s_lo = static_cast<double>(src.end() - std::lower_bound(src.begin(), src.end(), lo)) / static_cast<double>(src.size());
                    std::vector<std::pair<double, double>> line;
                    for (double x : detail::log_grid(lo, hi, 10)) line.emplace_back(x, s_lo * std::pow(x / lo, -a));
                    emit(std::string("powerlaw_") + (std::string(side) == "positive" ? "pos" : "neg") + sfx, line);
                }
            }
        }
    } else {
        throw domain_error("unknown figure '" + std::string(figure) + "'");
    }
    return written;
}

} // namespace mfsim
