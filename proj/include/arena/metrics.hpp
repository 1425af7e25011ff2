#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arena/types.hpp"

namespace arena {

// The seven benchmark metrics, pooled across sellers (summed numerators and
// denominators, never averaged ratios). Ratio metrics are null when their
// denominator is zero.
struct MetricsReport {
    std::optional<double> awr;   // wins / auctions
    std::optional<double> ecpm;  // cost / wins * 1000
    std::int64_t clicks = 0;
    std::optional<double> ecpc;  // cost / clicks
    std::int64_t conversions = 0;
    std::optional<double> ecpa;  // cost / conversions
    double rmse = 0.0;           // budget pacing deviation, summed per seller

    struct SellerBreakdown {
        int seller_id = 0;
        std::int64_t auctions = 0;
        std::int64_t wins = 0;
        double cost = 0.0;
        std::int64_t clicks = 0;
        std::int64_t conversions = 0;
        double rmse = 0.0;
    };
    std::vector<SellerBreakdown> per_seller;
};

// Aggregates a complete episode trace. Throws TraceError when a seller's
// balance history is incomplete (fewer rows than total_timesteps).
MetricsReport compute_metrics(const EpisodeTrace& trace);

// Sum over sellers of sqrt((1/T) * sum_t (target(t) - balance(t))^2) where
// target(t) = b0 * (T - t) / T uses each seller's own initial budget.
double rmse_pacing(const EpisodeTrace& trace);

nlohmann::json metrics_report_to_json(const MetricsReport& report);
std::string metrics_to_json(const MetricsReport& report, int indent = 2);

// One row per metric: name,value with null for undefined ratios.
void write_metrics_csv(const std::string& path, const MetricsReport& report);

}  // namespace arena
