#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mfsim/error.hpp"
#include "mfsim/orderbook.hpp"
#include "mfsim/random.hpp"

namespace mfsim {

enum class ImbalanceConvention { same_side, opposite_side };

/// Quote against which an order's current and original distances are taken
/// when computing y_i.
enum class PriceReference { same_side, opposite_side };

struct CancellationParams {
    double A = 1.12;
    double B = 0.2;
    ImbalanceConvention imbalance = ImbalanceConvention::same_side;
    PriceReference reference = PriceReference::same_side;
};

/// Per-order cancellation probability A (1 - e^-y) (n_imb + B) / n_tot,
/// clamped to [0,1].
inline double cancellation_probability(double y, std::size_t n_tot, double n_imb, const CancellationParams& p) {
    if (n_tot == 0) throw domain_error("cancellation_probability: n_tot must be at least 1");
    const double raw = p.A * (-std::expm1(-y)) * (n_imb + p.B) / static_cast<double>(n_tot);
    return std::clamp(raw, 0.0, 1.0);
}

/// y_i: distance of the order from the current same-side best over its
/// distance at placement. Both distances are magnitudes floored at one tick.
inline double order_price_ratio(const Order& o, const OrderBook& book,
                                PriceReference reference = PriceReference::same_side) {
    const double tick = book.tick();
    if (reference == PriceReference::opposite_side) {
        const auto ref = book.reference_level(opposite(o.side));
        const double d_now = ref ? std::abs(static_cast<double>(*ref - o.level)) : 0.0;
        return std::max(d_now, 1.0) / std::max(std::abs(static_cast<double>(o.opposite_gap)), 1.0);
    }
    const auto ref = book.reference_level(o.side);
    const double d_now = ref ? std::abs(static_cast<double>(*ref - o.level)) * tick : 0.0;
    return std::max(d_now, tick) / std::max(std::abs(o.x_original), tick);
}

inline double order_imbalance(Side s, const BookStats& st, ImbalanceConvention conv) {
    const bool same = conv == ImbalanceConvention::same_side;
    const std::size_t count = (s == Side::buy) == same ? st.n_buy : st.n_sell;
    return static_cast<double>(count) / static_cast<double>(st.n_tot);
}

/// Probability that `o` is canceled in a sweep over the current book.
inline double cancellation_probability(const Order& o, const OrderBook& book, const CancellationParams& p) {
    const auto st = book.stats();
    return cancellation_probability(order_price_ratio(o, book, p.reference), st.n_tot, order_imbalance(o.side, st, p.imbalance), p);
}

/// One cancellation sweep. Each resting order is canceled independently with
/// its own probability, all evaluated on the pre-sweep book.
///
/// Every P_i is bounded by p_max = min(1, A (1 + B) / n_tot), so candidates
/// are drawn at rate p_max by geometric skipping and then accepted with
/// probability P_i / p_max. The marginal cancel probability of each order is
/// exactly P_i and draws stay independent, while the expected work per sweep
/// is O(A (1 + B)) instead of O(n_tot).
inline std::vector<Order> cancel_orders(OrderBook& book, const CancellationParams& p, Rng& rng) {
    std::vector<OrderId> canceled;
    std::vector<Order> removed;
    const auto st = book.stats();
    if (st.n_tot == 0 || p.A <= 0.0) return removed;

    const auto ids = book.resting_ids();
    const double p_max = std::min(1.0, p.A * (1.0 + p.B) / static_cast<double>(st.n_tot));
    auto consider = [&](OrderId id, double accept) {
        const Order& o = book.order(id);
        const double pi = cancellation_probability(order_price_ratio(o, book, p.reference), st.n_tot,
                                                   order_imbalance(o.side, st, p.imbalance), p);
        if (accept < pi / p_max) canceled.push_back(id);
    };

    if (p_max >= 1.0) {
        for (OrderId id : ids) consider(id, uniform01(rng));
    } else {
        const double log_q = std::log1p(-p_max);
        std::size_t i = 0;
        while (true) {
            const double skip = std::floor(std::log(uniform_open(rng)) / log_q);
            if (skip >= static_cast<double>(ids.size() - i)) break;
            i += static_cast<std::size_t>(skip);
            consider(ids[i], uniform01(rng));
            ++i;
            if (i >= ids.size()) break;
        }
    }

    removed.reserve(canceled.size());
    for (OrderId id : canceled) removed.push_back(book.remove_order(id));
    return removed;
}

/// Ids of the orders canceled by one sweep; see cancel_orders.
inline std::vector<OrderId> cancellation_sweep(OrderBook& book, const CancellationParams& p, Rng& rng) {
    std::vector<OrderId> ids;
    for (const Order& o : cancel_orders(book, p, rng)) ids.push_back(o.id);
    return ids;
}

} // namespace mfsim
