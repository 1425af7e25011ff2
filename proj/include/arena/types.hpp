#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace arena {

// Bad or inconsistent configuration (unknown algorithm, invalid
// hyperparameter, missing data source, ...). Reported before any episode runs.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file (dataset CSV, config JSON, search space JSON).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inconsistent episode trace (missing timesteps, seller mismatch, ...).
class TraceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TargetMetric { Awr, Clicks, Cnv, Rmse };

const char* to_string(TargetMetric target);
TargetMetric target_metric_from_string(const std::string& name);

// One logged auction: the seller's estimate inputs plus the price that won
// the original auction. ctr/cvr are filled in by the decomposition pass and
// are zero until then.
struct ImpressionOpportunity {
    int period = 1;
    int timestep = 1;
    int seller_id = 1;
    std::int64_t auction_id = 0;
    double p_value = 0.0;
    double winning_price = 0.0;
    double ctr = 0.0;
    double cvr = 0.0;
};

struct AuctionOutcome {
    bool won = false;
    double cost = 0.0;
    bool clicked = false;
    bool converted = false;
};

// Per-seller, per-timestep aggregate written to trace CSVs.
struct TimestepRecord {
    int seller_id = 0;
    int timestep = 0;
    std::int64_t auctions = 0;
    std::int64_t wins = 0;
    double cost = 0.0;
    std::int64_t clicks = 0;
    std::int64_t conversions = 0;
    double balance = 0.0;  // remaining budget after this timestep
};

// Result of one episode: rows are seller-major, timestep ascending, one row
// per (seller, timestep) even when a seller had no auctions that step.
struct EpisodeTrace {
    int period = 1;
    std::uint64_t seed = 0;
    int total_timesteps = 0;
    std::vector<int> seller_ids;
    std::vector<double> initial_budgets;  // parallel to seller_ids
    std::vector<TimestepRecord> rows;
    std::uint64_t nan_bid_warnings = 0;
    std::uint64_t protocol_incidents = 0;
    std::string config_digest;
    std::string dataset_digest;
};

}  // namespace arena
