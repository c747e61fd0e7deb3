#pragma once

// Unit-size limit order book with price-time priority on a fixed tick grid.
//
// Prices are log-prices. Internally every price is an integer level on the
// tick grid (price = level * tick), so alignment is exact and levels can be
// compared without tolerance. Relative prices follow the placement
// convention: x = pi - pi_b for buys and x = pi_a - pi for sells, both
// measured against the quotes right before the order arrives.

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mfsim/error.hpp"
#include "mfsim/format.hpp"

namespace mfsim {

enum class Side : int { buy = 1, sell = -1 };

constexpr int sign_of(Side s) noexcept { return static_cast<int>(s); }
constexpr Side opposite(Side s) noexcept { return s == Side::buy ? Side::sell : Side::buy; }
constexpr Side side_from_sign(int s) noexcept { return s >= 0 ? Side::buy : Side::sell; }

using OrderId = std::uint64_t;
using Level = std::int64_t;

struct Order {
    OrderId id = 0;
    Side side = Side::buy;
    Level level = 0;          ///< price level on the tick grid
    double log_price = 0.0;   ///< level * tick
    double x_original = 0.0;  ///< relative price drawn at placement
    std::int64_t placed_at = 0;
    Level opposite_gap = 0;   ///< ticks from the opposite reference quote at placement
};

struct Trade {
    std::int64_t event_time = 0;
    double price = 0.0;  ///< log-price of the resting order that was hit
    Side aggressor = Side::buy;
    OrderId resting_id = 0;
};

struct Quotes {
    std::optional<double> bid;
    std::optional<double> ask;
};

struct BookStats {
    std::size_t n_tot = 0;
    std::size_t n_buy = 0;
    std::size_t n_sell = 0;
    friend bool operator==(const BookStats&, const BookStats&) = default;
};

struct Executed { Trade trade; };
struct Rested { Order order; };
struct Rejected {};

using PlacementResult = std::variant<Executed, Rested, Rejected>;

class OrderBook {
public:
    static constexpr double default_tick = 3e-4;

    explicit OrderBook(double tick = default_tick) : tick_(tick) {
        if (!(tick > 0.0) || !std::isfinite(tick)) throw domain_error("tick size must be positive");
    }

    double tick() const noexcept { return tick_; }

    /// Seeds one buy and one sell order one tick apart around log-price 0:
    /// bid at int[-T/2 / T] = -1, ask at int[T/2 / T] = 0.
    void seed(std::int64_t t = 0) {
        insert(Side::buy, -1, 0.0, t);
        insert(Side::sell, 0, 0.0, t);
    }

    /// Current best level of a side, or the last level it held while non-empty.
    std::optional<Level> reference_level(Side s) const {
        const auto& lv = levels(s);
        if (!lv.empty()) return s == Side::buy ? lv.rbegin()->first : lv.begin()->first;
        return s == Side::buy ? last_bid_ : last_ask_;
    }

    /// Best quotes with the empty-side fallback applied.
    Quotes best_quotes() const {
        Quotes q;
        if (auto b = reference_level(Side::buy)) q.bid = price_of(*b);
        if (auto a = reference_level(Side::sell)) q.ask = price_of(*a);
        return q;
    }

    /// Spread S = pi_a - pi_b, absent unless both references exist.
    std::optional<double> spread() const {
        auto b = reference_level(Side::buy);
        auto a = reference_level(Side::sell);
        if (!a || !b) return std::nullopt;
        return static_cast<double>(*a - *b) * tick_;
    }

    std::optional<double> mid_price() const {
        auto q = best_quotes();
        if (!q.bid || !q.ask) return std::nullopt;
        return 0.5 * (*q.bid + *q.ask);
    }

    /// Classifies an incoming unit order by its relative price and applies it.
    ///
    /// x >= S executes against the oldest order at the best opposite level.
    /// Otherwise the order rests at T*floor(pi/T). A sell whose rounded price
    /// would touch the best bid is clamped to one tick above it. An effective
    /// market order that meets an empty opposite side rests one tick inside
    /// the remembered opposite quote.
    PlacementResult classify_and_apply(Side side, double x, std::int64_t t) {
        if (!std::isfinite(x)) throw domain_error("relative price must be finite");
        const auto bid = reference_level(Side::buy);
        const auto ask = reference_level(Side::sell);
        if (!bid || !ask) return Rejected{};

        const double spread = static_cast<double>(*ask - *bid) * tick_;
        const Side other = opposite(side);
        if (x >= spread) {
            if (!levels(other).empty()) return Executed{execute_against(other, side, t)};
            const Level lvl = side == Side::buy ? *ask - 1 : *bid + 1;
            return Rested{insert(side, lvl, x, t)};
        }

        const double rel = x / tick_;
        Level lvl;
        if (side == Side::buy) {
            lvl = floor_level(static_cast<double>(*bid) + rel);
            if (!levels(Side::sell).empty() && lvl >= *ask) lvl = *ask - 1;
        } else {
            lvl = floor_level(static_cast<double>(*ask) - rel);
            if (!levels(Side::buy).empty() && lvl <= *bid) lvl = *bid + 1;
        }
        return Rested{insert(side, lvl, x, t)};
    }

    Order remove_order(OrderId id) {
        auto it = orders_.find(id);
        if (it == orders_.end()) throw book_error("order " + std::to_string(id) + " is not resting");
        const Order o = it->second.order;
        auto& lv = levels(o.side);
        auto lit = lv.find(o.level);
        auto& queue = lit->second;
        for (auto q = queue.begin(); q != queue.end(); ++q) {
            if (*q == id) {
                queue.erase(q);
                break;
            }
        }
        if (queue.empty()) lv.erase(lit);
        unlink(it);
        return o;
    }

    BookStats stats() const noexcept {
        return {orders_.size(), count_buy_, orders_.size() - count_buy_};
    }

    bool contains(OrderId id) const { return orders_.count(id) != 0; }

    const Order& order(OrderId id) const {
        auto it = orders_.find(id);
        if (it == orders_.end()) throw book_error("order " + std::to_string(id) + " is not resting");
        return it->second.order;
    }

    /// Ids of all resting orders in a stable, deterministic (not price) order.
    std::span<const OrderId> resting_ids() const noexcept { return ids_; }

    /// Resting ids at one level, oldest first.
    std::vector<OrderId> level_queue(Side s, Level level) const {
        const auto& lv = levels(s);
        auto it = lv.find(level);
        if (it == lv.end()) return {};
        return {it->second.begin(), it->second.end()};
    }

    std::size_t level_count(Side s) const { return levels(s).size(); }

    double price_of(Level l) const noexcept { return static_cast<double>(l) * tick_; }

    /// Checks the structural invariants; returns a description of the first
    /// violation or an empty string.
    std::string check_invariants() const {
        std::size_t n_buy = 0, n_total = 0;
        for (Side s : {Side::buy, Side::sell}) {
            for (const auto& [lvl, queue] : levels(s)) {
                if (queue.empty()) return "empty level retained";
                std::int64_t prev_t = INT64_MIN;
                for (OrderId id : queue) {
                    auto it = orders_.find(id);
                    if (it == orders_.end()) return "level references unknown order";
                    const Order& o = it->second.order;
                    if (o.level != lvl || o.side != s) return "order filed under wrong level";
                    if (o.log_price != price_of(lvl)) return "price off the tick grid";
                    if (o.placed_at < prev_t) return "FIFO order violated";
                    prev_t = o.placed_at;
                    ++n_total;
                    if (s == Side::buy) ++n_buy;
                }
            }
        }
        if (n_total != orders_.size() || n_buy != count_buy_) return "count mismatch";
        if (ids_.size() != orders_.size()) return "id index mismatch";
        if (!bids_.empty() && !asks_.empty() && bids_.rbegin()->first >= asks_.begin()->first)
            return "book crossed";
        return {};
    }

private:
    struct Slot {
        Order order;
        std::size_t index;  // position in ids_
    };
    using LevelMap = std::map<Level, std::deque<OrderId>>;

    static Level floor_level(double v) {
        // Values that sit on the grid up to rounding noise stay on their level.
        return static_cast<Level>(std::floor(v + 1e-9));
    }

    LevelMap& levels(Side s) noexcept { return s == Side::buy ? bids_ : asks_; }
    const LevelMap& levels(Side s) const noexcept { return s == Side::buy ? bids_ : asks_; }

    Order insert(Side side, Level lvl, double x, std::int64_t t) {
        Order o{next_id_++, side, lvl, price_of(lvl), x, t, 0};
        if (auto ref = reference_level(opposite(side))) o.opposite_gap = side == Side::buy ? *ref - lvl : lvl - *ref;
        levels(side)[lvl].push_back(o.id);
        orders_.emplace(o.id, Slot{o, ids_.size()});
        ids_.push_back(o.id);
        if (side == Side::buy) ++count_buy_;
        remember_quotes();
        return o;
    }

    Trade execute_against(Side resting_side, Side aggressor, std::int64_t t) {
        auto& lv = levels(resting_side);
        auto lit = resting_side == Side::buy ? std::prev(lv.end()) : lv.begin();
        const OrderId id = lit->second.front();
        lit->second.pop_front();
        const Level lvl = lit->first;
        if (lit->second.empty()) lv.erase(lit);
        unlink(orders_.find(id));
        return Trade{t, price_of(lvl), aggressor, id};
    }

    void unlink(std::unordered_map<OrderId, Slot>::iterator it) {
        const std::size_t idx = it->second.index;
        const OrderId last = ids_.back();
        ids_[idx] = last;
        orders_.at(last).index = idx;
        ids_.pop_back();
        if (it->second.order.side == Side::buy) --count_buy_;
        orders_.erase(it);
        remember_quotes();
    }

    void remember_quotes() {
        if (!bids_.empty()) last_bid_ = bids_.rbegin()->first;
        if (!asks_.empty()) last_ask_ = asks_.begin()->first;
    }

    double tick_;
    LevelMap bids_;
    LevelMap asks_;
    std::unordered_map<OrderId, Slot> orders_;
    std::vector<OrderId> ids_;
    std::size_t count_buy_ = 0;
    std::optional<Level> last_bid_;
    std::optional<Level> last_ask_;
    OrderId next_id_ = 1;
};

/// CSV event log: event_time,kind,sign,price,n_tot
class EventLog {
public:
    explicit EventLog(std::ostream& os) : os_(&os) {}

    void record(std::int64_t t, std::string_view kind, Side side, double price, std::size_t n_tot) {
        *os_ << t << ',' << kind << ',' << sign_of(side) << ',' << fmt12(price) << ',' << n_tot << '\n';
    }

private:
    std::ostream* os_;
};

} // namespace mfsim
