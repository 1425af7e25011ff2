#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arena/metrics.hpp"
#include "arena/rng.hpp"
#include "arena/types.hpp"

namespace arena::test {

// Builds a well-formed trace from explicit per-seller row lists. Each entry in
// `rows` must already be timestep-complete (one record for t = 1..T).
inline EpisodeTrace make_trace(int total_timesteps, const std::vector<int>& seller_ids,
                               const std::vector<double>& budgets,
                               const std::vector<std::vector<TimestepRecord>>& rows) {
    EpisodeTrace trace;
    trace.period = 1;
    trace.total_timesteps = total_timesteps;
    trace.seller_ids = seller_ids;
    trace.initial_budgets = budgets;
    for (const auto& seller_rows : rows) {
        trace.rows.insert(trace.rows.end(), seller_rows.begin(), seller_rows.end());
    }
    return trace;
}

// Second implementation of the metric definitions, written as a flat recount
// over individual rows so it shares no code with compute_metrics.
struct NaiveMetrics {
    std::optional<double> awr;
    std::optional<double> ecpm;
    std::int64_t clicks = 0;
    std::optional<double> ecpc;
    std::int64_t conversions = 0;
    std::optional<double> ecpa;
    double rmse = 0.0;
};

inline NaiveMetrics naive_recount(const EpisodeTrace& trace) {
    NaiveMetrics m;
    long double auctions = 0, wins = 0, cost = 0;
    for (const auto& row : trace.rows) {
        auctions += static_cast<long double>(row.auctions);
        wins += static_cast<long double>(row.wins);
        cost += static_cast<long double>(row.cost);
        m.clicks += row.clicks;
        m.conversions += row.conversions;
    }
    if (auctions > 0) m.awr = static_cast<double>(wins / auctions);
    if (wins > 0) m.ecpm = static_cast<double>(cost / wins * 1000.0L);
    if (m.clicks > 0) m.ecpc = static_cast<double>(cost / static_cast<long double>(m.clicks));
    if (m.conversions > 0) {
        m.ecpa = static_cast<double>(cost / static_cast<long double>(m.conversions));
    }

    const int T = trace.total_timesteps;
    for (std::size_t s = 0; s < trace.seller_ids.size(); ++s) {
        const double b0 = trace.initial_budgets[s];
        long double acc = 0;
        for (int t = 1; t <= T; ++t) {
            const auto& row = trace.rows[s * static_cast<std::size_t>(T) +
                                         static_cast<std::size_t>(t - 1)];
            const double target = b0 * static_cast<double>(T - t) / static_cast<double>(T);
            const double diff = target - row.balance;
            acc += static_cast<long double>(diff) * diff;
        }
        m.rmse += std::sqrt(static_cast<double>(acc / T));
    }
    return m;
}

// Random but internally consistent mini-trace: counters nest (wins <= auctions,
// clicks <= wins, conversions <= clicks), balances never increase, cost
// telescopes the balance column.
inline EpisodeTrace random_mini_trace(RandomStream& rng) {
    const int S = 1 + static_cast<int>(rng.next_u64() % 3);
    const int T = 1 + static_cast<int>(rng.next_u64() % 6);
    std::vector<int> ids;
    std::vector<double> budgets;
    std::vector<std::vector<TimestepRecord>> rows;
    for (int s = 1; s <= S; ++s) {
        ids.push_back(s);
        const double b0 = 1.0 + rng.uniform() * 99.0;
        budgets.push_back(b0);
        double balance = b0;
        std::vector<TimestepRecord> seller_rows;
        for (int t = 1; t <= T; ++t) {
            TimestepRecord row;
            row.seller_id = s;
            row.timestep = t;
            row.auctions = static_cast<std::int64_t>(rng.next_u64() % 8);
            row.wins = row.auctions > 0
                           ? static_cast<std::int64_t>(rng.next_u64() %
                                                       static_cast<std::uint64_t>(row.auctions + 1))
                           : 0;
            row.clicks = row.wins > 0
                             ? static_cast<std::int64_t>(rng.next_u64() %
                                                         static_cast<std::uint64_t>(row.wins + 1))
                             : 0;
            row.conversions =
                row.clicks > 0
                    ? static_cast<std::int64_t>(rng.next_u64() %
                                                static_cast<std::uint64_t>(row.clicks + 1))
                    : 0;
            const double spend = row.wins > 0 ? rng.uniform() * balance : 0.0;
            row.cost = spend;
            balance -= spend;
            row.balance = balance;
            seller_rows.push_back(row);
        }
        rows.push_back(std::move(seller_rows));
    }
    return make_trace(T, ids, budgets, rows);
}

inline bool close_rel(double a, double b, double tol) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
    return std::fabs(a - b) <= tol * scale;
}

inline bool same_opt(const std::optional<double>& a, const std::optional<double>& b, double tol) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return close_rel(*a, *b, tol);
}

}  // namespace arena::test
