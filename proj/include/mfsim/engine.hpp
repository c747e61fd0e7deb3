#pragma once

// Simulation driver: one round is a fresh book fed by pregenerated order
// signs and relative prices, with a cancellation sweep after every order.
// Mid-prices are sampled in trade event time after the transient window.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <thread>
#include <vector>

#include "mfsim/cancellation.hpp"
#include "mfsim/error.hpp"
#include "mfsim/orderbook.hpp"
#include "mfsim/random.hpp"
#include "mfsim/stochastic.hpp"

namespace mfsim {

struct RunConfig {
    double hurst = 0.8;
    PriceSamplerSpec sampler = make_sampler_spec(FamilyKind::studentqg, FamilyKind::studentqg, 1.3, 0.0024);
    CancellationParams cancel{};
    double tick = OrderBook::default_tick;
    std::size_t steps_per_round = 200'000;
    std::size_t transient = 2'000;
    std::size_t rounds = 20;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(hurst > 0.0 && hurst < 1.0)) throw domain_error("hurst must lie in (0,1)");
        if (!(tick > 0.0)) throw domain_error("tick must be positive");
        if (steps_per_round < 1 || rounds < 1) throw domain_error("steps_per_round and rounds must be at least 1");
        if (transient >= steps_per_round) throw domain_error("transient must be smaller than steps_per_round");
        if (!(cancel.A >= 0.0) || !(cancel.B >= 0.0)) throw domain_error("cancellation parameters must be nonnegative");
        mfsim::validate(sampler.left);
        mfsim::validate(sampler.right);
    }
};

struct EventCounts {
    std::size_t orders = 0;  ///< post-transient order arrivals
    std::size_t trades = 0;
    std::size_t rested = 0;
    std::size_t canceled = 0;

    double trade_fraction() const { return orders ? static_cast<double>(trades) / static_cast<double>(orders) : 0.0; }

    EventCounts& operator+=(const EventCounts& o) {
        orders += o.orders;
        trades += o.trades;
        rested += o.rested;
        canceled += o.canceled;
        return *this;
    }
};

struct RoundResult {
    std::vector<double> mid_prices;  ///< I(t) after each post-transient trade
    EventCounts counts;
};

/// Mid-price series pooled over rounds. Returns are never differenced across
/// a round boundary.
struct ReturnSeries {
    std::vector<std::vector<double>> rounds;
    std::vector<EventCounts> round_counts;

    std::size_t trade_count() const {
        std::size_t n = 0;
        for (const auto& r : rounds) n += r.size();
        return n;
    }
    EventCounts total_counts() const {
        EventCounts c;
        for (const auto& r : round_counts) c += r;
        return c;
    }
};

/// Stream identifiers for seed derivation within a round.
enum class Stream : std::uint64_t { rounds = 0, signs = 1, prices = 2, cancels = 3 };

inline std::uint64_t round_seed(std::uint64_t master, std::size_t round) {
    return derive_seed(master, round, static_cast<std::uint64_t>(Stream::rounds));
}

/// Runs one round. `log`, if given, receives one CSV record per event.
inline RoundResult run_round(const RunConfig& cfg, std::uint64_t seed, EventLog* log = nullptr) {
    cfg.validate();
    Rng sign_rng(derive_seed(seed, 0, static_cast<std::uint64_t>(Stream::signs)));
    Rng price_rng(derive_seed(seed, 0, static_cast<std::uint64_t>(Stream::prices)));
    Rng cancel_rng(derive_seed(seed, 0, static_cast<std::uint64_t>(Stream::cancels)));

    const auto signs = generate_sign_series(cfg.hurst, cfg.steps_per_round, sign_rng);
    std::vector<double> xs(cfg.steps_per_round);
    for (auto& x : xs) x = sample_relative_price(cfg.sampler, price_rng);

    OrderBook book(cfg.tick);
    book.seed(0);

    RoundResult out;
    out.mid_prices.reserve(cfg.steps_per_round / 3);
    for (std::size_t step = 1; step <= cfg.steps_per_round; ++step) {
        const auto t = static_cast<std::int64_t>(step);
        const bool recording = step > cfg.transient;
        const Side side = side_from_sign(signs.values[step - 1]);
        const auto result = book.classify_and_apply(side, xs[step - 1], t);

        if (std::holds_alternative<Rejected>(result))
            throw error("order rejected at step " + std::to_string(step) + ": book has no reference quotes");
        if (const auto* ex = std::get_if<Executed>(&result)) {
            if (recording) {
                out.mid_prices.push_back(*book.mid_price());
                ++out.counts.trades;
            }
            if (log) log->record(t, "execute", side, ex->trade.price, book.stats().n_tot);
        } else {
            const auto& o = std::get<Rested>(result).order;
            if (recording) ++out.counts.rested;
            if (log) log->record(t, "place", side, o.log_price, book.stats().n_tot);
        }
        if (recording) ++out.counts.orders;

        const auto canceled = cancel_orders(book, cfg.cancel, cancel_rng);
        if (recording) out.counts.canceled += canceled.size();
        if (log) {
            const auto n_tot = book.stats().n_tot;
            for (const Order& o : canceled) log->record(t, "cancel", o.side, o.log_price, n_tot);
        }
    }
    return out;
}

/// Runs all rounds and pools them in round order. Rounds are distributed
/// over `jobs` threads; the result does not depend on the schedule.
inline ReturnSeries run_simulation(const RunConfig& cfg, unsigned jobs = 1) {
    cfg.validate();
    std::vector<RoundResult> results(cfg.rounds);
    std::vector<std::exception_ptr> errors(cfg.rounds);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < cfg.rounds;) {
            try {
                results[r] = run_round(cfg, round_seed(cfg.seed, r));
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cfg.rounds)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    ReturnSeries series;
    for (auto& r : results) {
        series.rounds.push_back(std::move(r.mid_prices));
        series.round_counts.push_back(r.counts);
    }
    return series;
}

struct AggregatedReturns {
    std::size_t dt = 1;
    std::vector<double> raw;           ///< r_dt
    std::vector<double> standardized;  ///< g_dt = (r_dt - mu) / sigma
    double mean = 0.0;
    double stddev = 0.0;
};

/// Non-overlapping lag-dt differences of each mid-price sequence, pooled in
/// order: r_k = I((k+1) dt) - I(k dt).
inline std::vector<double> window_returns(std::span<const std::vector<double>> mids, std::size_t dt) {
    if (dt < 1) throw domain_error("aggregation window must be at least 1 trade");
    std::vector<double> r;
    for (const auto& I : mids)
        for (std::size_t k = 0; (k + 1) * dt < I.size(); ++k) r.push_back(I[(k + 1) * dt] - I[k * dt]);
    return r;
}

/// Standardizes by the sample mean and population standard deviation.
inline AggregatedReturns standardize(std::vector<double> r, std::size_t dt) {
    if (r.empty()) throw data_error("no returns at dt=" + std::to_string(dt) + ": series too short");
    AggregatedReturns out;
    out.dt = dt;
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(r.size()));
    if (!(sd > 0.0) || sd <= 1e-14 * std::max(1.0, std::abs(mean)))
        throw data_error("returns at dt=" + std::to_string(dt) + " have zero variance");
    out.mean = mean;
    out.stddev = sd;
    out.standardized.reserve(r.size());
    for (double v : r) out.standardized.push_back((v - mean) / sd);
    out.raw = std::move(r);
    return out;
}

inline AggregatedReturns aggregate_returns(const ReturnSeries& s, std::size_t dt) {
    return standardize(window_returns(s.rounds, dt), dt);
}

inline AggregatedReturns aggregate_returns(std::span<const double> mids, std::size_t dt) {
    const std::vector<std::vector<double>> one{std::vector<double>(mids.begin(), mids.end())};
    return standardize(window_returns(one, dt), dt);
}

} // namespace mfsim
