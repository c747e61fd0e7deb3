#pragma once

// Run-config text format: flat `key = value` lines grouped under optional
// [section] headers, '#' comments, string values optionally double-quoted.
//
//   [model]   hurst, tick
//   [sampler] left, right, alpha_x, sigma_x
//   [cancel]  A, B, imbalance, reference
//   [run]     steps_per_round, transient, rounds, seed

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "mfsim/engine.hpp"
#include "mfsim/error.hpp"
#include "mfsim/format.hpp"

namespace mfsim {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view v, int line, std::string_view key) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out))
        throw config_error("invalid number for '" + std::string(key) + "': " + std::string(v), line);
    return out;
}

inline std::uint64_t parse_count(std::string_view v, int line, std::string_view key) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        throw config_error("invalid integer for '" + std::string(key) + "': " + std::string(v), line);
    return out;
}

// Section each key belongs to.
inline const std::map<std::string, std::string, std::less<>>& config_keys() {
    static const std::map<std::string, std::string, std::less<>> keys{
        {"hurst", "model"},          {"tick", "model"},
        {"left", "sampler"},         {"right", "sampler"},
        {"alpha_x", "sampler"},      {"sigma_x", "sampler"},
        {"A", "cancel"},             {"B", "cancel"},
        {"imbalance", "cancel"},     {"reference", "cancel"},
        {"steps_per_round", "run"},  {"transient", "run"},
        {"rounds", "run"},           {"seed", "run"},
    };
    return keys;
}

} // namespace detail

/// Parses a run config, starting from `base` for keys that are absent.
inline RunConfig parse_run_config(std::string_view text, RunConfig base = {}) {
    RunConfig cfg = base;
    FamilyKind left = cfg.sampler.left_kind(), right = cfg.sampler.right_kind();
    double alpha_x = cfg.sampler.alpha_x, sigma_x = cfg.sampler.sigma_x;
    std::string section;
    std::map<std::string, int, std::less<>> seen;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const auto line = detail::trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw config_error("unterminated section header", line_no);
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (section != "model" && section != "sampler" && section != "cancel" && section != "run")
                throw config_error("unknown section [" + section + "]", line_no);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw config_error("expected 'key = value'", line_no);
        const auto key = detail::trim(line.substr(0, eq));
        auto value = detail::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) throw config_error("missing key", line_no);
        if (value.empty()) throw config_error("missing value for '" + std::string(key) + "'", line_no);

        const auto& keys = detail::config_keys();
        const auto kit = keys.find(key);
        if (kit == keys.end()) throw config_error("unknown key '" + std::string(key) + "'", line_no);
        if (!section.empty() && kit->second != section)
            throw config_error("key '" + std::string(key) + "' belongs in [" + kit->second + "]", line_no);
        if (auto [it, fresh] = seen.emplace(std::string(key), line_no); !fresh)
            throw config_error("duplicate key '" + std::string(key) + "' (first on line " + std::to_string(it->second) + ")", line_no);

        try {
            if (key == "hurst") cfg.hurst = detail::parse_double(value, line_no, key);
            else if (key == "tick") cfg.tick = detail::parse_double(value, line_no, key);
            else if (key == "left") left = parse_family(value);
            else if (key == "right") right = parse_family(value);
            else if (key == "alpha_x") alpha_x = detail::parse_double(value, line_no, key);
            else if (key == "sigma_x") sigma_x = detail::parse_double(value, line_no, key);
            else if (key == "A") cfg.cancel.A = detail::parse_double(value, line_no, key);
            else if (key == "B") cfg.cancel.B = detail::parse_double(value, line_no, key);
            else if (key == "imbalance" || key == "reference") {
                bool same;
                if (value == "same_side") same = true;
                else if (value == "opposite_side") same = false;
                else throw config_error("expected same_side or opposite_side for '" + std::string(key) + "'", line_no);
                if (key == "imbalance") cfg.cancel.imbalance = same ? ImbalanceConvention::same_side : ImbalanceConvention::opposite_side;
                else cfg.cancel.reference = same ? PriceReference::same_side : PriceReference::opposite_side;
            }
            else if (key == "steps_per_round") cfg.steps_per_round = detail::parse_count(value, line_no, key);
            else if (key == "transient") cfg.transient = detail::parse_count(value, line_no, key);
            else if (key == "rounds") cfg.rounds = detail::parse_count(value, line_no, key);
            else if (key == "seed") cfg.seed = detail::parse_count(value, line_no, key);
        } catch (const config_error&) {
            throw;
        } catch (const error& e) {
            throw config_error(e.what(), line_no);
        }
    }

    try {
        cfg.sampler = make_sampler_spec(left, right, alpha_x, sigma_x);
        cfg.validate();
    } catch (const config_error&) {
        throw;
    } catch (const error& e) {
        throw config_error(e.what(), 0);
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'", 0);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), base);
}

/// Serializes every key; parse_run_config(format_run_config(c)) reproduces c.
inline std::string format_run_config(const RunConfig& c) {
    auto conv = [](bool same) { return same ? "same_side" : "opposite_side"; };
    std::ostringstream os;
    os << "[model]\n"
       << "hurst = " << fmt12(c.hurst) << "\n"
       << "tick = " << fmt12(c.tick) << "\n\n"
       << "[sampler]\n"
       << "left = \"" << to_string(c.sampler.left_kind()) << "\"\n"
       << "right = \"" << to_string(c.sampler.right_kind()) << "\"\n"
       << "alpha_x = " << fmt12(c.sampler.alpha_x) << "\n"
       << "sigma_x = " << fmt12(c.sampler.sigma_x) << "\n\n"
       << "[cancel]\n"
       << "A = " << fmt12(c.cancel.A) << "\n"
       << "B = " << fmt12(c.cancel.B) << "\n"
       << "imbalance = \"" << conv(c.cancel.imbalance == ImbalanceConvention::same_side) << "\"\n"
       << "reference = \"" << conv(c.cancel.reference == PriceReference::same_side) << "\"\n\n"
       << "[run]\n"
       << "steps_per_round = " << c.steps_per_round << "\n"
       << "transient = " << c.transient << "\n"
       << "rounds = " << c.rounds << "\n"
       << "seed = " << c.seed << "\n";
    return os.str();
}

} // namespace mfsim
