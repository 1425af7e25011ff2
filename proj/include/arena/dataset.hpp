#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "arena/types.hpp"

namespace arena {

// Synthetic generator bounds. p-values stay strictly inside (lo, hi); the
// winning price is floored so a zero bid can never win.
inline constexpr double kPValueLo = 1e-4;
inline constexpr double kPValueHi = 0.5;
inline constexpr double kWinningPriceFloor = 1e-3;

struct SyntheticConfig {
    int n_sellers = 48;
    int n_timesteps = 48;
    int auctions_per_seller_timestep = 500;
    double p_log_mean = -4.605170185988091;   // ln(0.01)
    double p_log_sigma = 1.0;
    double wp_log_mean = -1.6094379124341003;  // ln(0.2)
    double wp_log_sigma = 0.7;
    std::uint64_t seed = 0;

    // Throws ConfigError on non-positive counts or sigmas.
    void validate() const;
};

// Loads a dataset CSV (header: period,timestep,seller_id,auction_id,p_value,
// winning_price), validates every row, sorts canonically by (period,
// seller_id, timestep, auction_id) and derives ctr/cvr from `run_seed`.
// Throws ParseError with a line number on malformed input.
std::vector<ImpressionOpportunity> load_dataset(const std::string& path, std::uint64_t run_seed);

// Two periods of log-normal auction logs, content determined entirely by
// cfg.seed; ctr/cvr derived from `run_seed` as in load_dataset.
std::vector<ImpressionOpportunity> generate_synthetic(const SyntheticConfig& cfg,
                                                      std::uint64_t run_seed);

// Canonical sort + per-seller ctr/cvr derivation. Each seller consumes its
// own decomposition stream in row order, so the split for a given row never
// depends on other sellers or on processing order.
void decompose_rows(std::vector<ImpressionOpportunity>& rows, std::uint64_t run_seed);

// Writes rows in the schema accepted by load_dataset (ctr/cvr are derived
// data and are not stored).
void write_dataset_csv(const std::string& path, std::span<const ImpressionOpportunity> rows);

// FNV-1a 64 over the canonical row serialization (identity of the logged
// data; independent of ctr/cvr which are seed-derived).
std::string dataset_digest(std::span<const ImpressionOpportunity> rows);

// FNV-1a 64 of a raw byte string, hex-encoded. Used for config files.
std::string fnv1a_hex(std::string_view bytes);

// Bid segment observed in a seller's period-1 logs. Sellers absent from
// period 1 fall back to (0, cpc_bound) at the call site.
struct BidBounds {
    double lo = 0.0;
    double hi = 0.0;
    bool has_history = false;
};

std::unordered_map<int, BidBounds> extract_bid_bounds(std::span<const ImpressionOpportunity> rows,
                                                      int period = 1);

}  // namespace arena
