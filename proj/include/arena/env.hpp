#pragma once

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "arena/algorithms.hpp"
#include "arena/dataset.hpp"
#include "arena/rng.hpp"
#include "arena/types.hpp"

namespace arena {

struct SellerConfig {
    int seller_id = 1;
    double initial_budget = 10000.0;
    double cpc_bound = 0.5;
    double cpa_bound = 0.05;
    AlgorithmSpec algorithm;

    // Throws ConfigError on non-positive budget or bounds.
    void validate() const;
};

struct EpisodeParams {
    int period = 1;
    int total_timesteps = 48;
    std::uint64_t seed = 0;
    int threads = 1;  // 0 = hardware concurrency
    std::string config_digest;
    std::string dataset_digest;
};

// Resolves one second-price auction against the logged winning price. The
// bid is clamped into [0, remaining_budget] first, so a win can never spend
// more than the budget; ties lose. A NaN bid acts as 0 (the caller counts
// the warning). Clicks are sampled only on wins, conversions only on clicks.
AuctionOutcome run_auction(double bid, const ImpressionOpportunity& opp, double remaining_budget,
                           RandomStream& rng);

// One seller's episode state: bidder instance, remaining budget, outcome
// stream and counters. remaining_budget is the canonical accumulator; a
// timestep's cost is defined as balance-before minus balance-after.
class SellerRun {
public:
    SellerRun(const SellerConfig& config, const BidBounds& bounds, const EpisodeParams& params);

    // Drives a ready-made bidder instead of building one from the config's
    // algorithm spec. Lets tests exercise paths no valid config can produce
    // (NaN bids, wrong bid counts).
    SellerRun(const SellerConfig& config, std::unique_ptr<Bidder> bidder,
              const EpisodeParams& params);

    // Resolves one timestep's auctions in ascending auction_id order, then
    // feeds the aggregate outcome to the bidder's observe hook (also when the
    // slice is empty). Rows must carry this seller's id and timestep t.
    TimestepRecord process_timestep(std::span<const ImpressionOpportunity> rows, int t);

    int seller_id() const { return config_.seller_id; }
    double initial_budget() const { return config_.initial_budget; }
    double remaining_budget() const { return remaining_; }
    const std::vector<double>& balance_history() const { return balance_history_; }
    std::uint64_t nan_bid_warnings() const { return nan_bid_warnings_; }
    std::uint64_t protocol_incidents() const { return bidder_->protocol_incidents(); }

private:
    SellerConfig config_;
    std::unique_ptr<Bidder> bidder_;
    int total_timesteps_;
    double remaining_;
    RandomStream outcome_rng_;
    std::vector<double> balance_history_;
    std::vector<AuctionQuote> quotes_;
    std::vector<double> bids_;
    std::uint64_t nan_bid_warnings_ = 0;
};

// Advances every seller through timestep t. `slice` holds only timestep-t
// rows in canonical order; sellers without rows get an empty slice (their
// observe hook still runs). Returns one record per seller in roster order.
std::vector<TimestepRecord> run_timestep(std::vector<SellerRun>& sellers,
                                         std::span<const ImpressionOpportunity> slice, int t);

// Runs one period end to end. `data` must contain only rows of
// params.period, canonically sorted; every row must reference a roster
// seller and a timestep within range. Sellers never share state, so they run
// in parallel (params.threads) with a schedule-independent result.
EpisodeTrace run_episode(const std::vector<SellerConfig>& configs,
                         std::span<const ImpressionOpportunity> data, const EpisodeParams& params,
                         const std::unordered_map<int, BidBounds>& bid_bounds = {});

// Trace CSV: one row per (seller, timestep), schema
// seller_id,timestep,wins,cost,clicks,conversions,balance
void write_trace_csv(const std::string& path, const EpisodeTrace& trace);

// Sidecar JSON with the episode identity (period, seed, dimensions, digests,
// warning counters).
void write_episode_header_json(const std::string& path, const EpisodeTrace& trace);

}  // namespace arena
