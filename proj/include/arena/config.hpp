#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "arena/dataset.hpp"
#include "arena/env.hpp"
#include "arena/tuning.hpp"

namespace arena {

// Top-level run description. Exactly one data source (dataset file or
// synthetic generator); one algorithm applied fleet-wide or one per seller.
struct ArenaConfig {
    std::optional<std::string> dataset_path;
    std::optional<SyntheticConfig> synthetic;
    std::optional<std::uint64_t> synthetic_seed;  // defaults to the run seed

    int n_sellers = 48;
    std::vector<double> initial_budgets;  // scalar broadcast or per-seller list
    double cpc_bound = 0.5;
    double cpa_bound = 0.05;

    AlgorithmSpec fleet_algorithm;
    std::vector<AlgorithmSpec> per_seller_algorithms;  // empty -> fleet-wide

    int total_timesteps = 48;
    std::optional<std::uint64_t> seed;
    std::string output_dir = "out";
    int threads = 0;  // 0 = hardware concurrency

    // Roster with ids 1..n_sellers. Throws ConfigError on bad counts.
    std::vector<SellerConfig> seller_configs() const;

    // Loads or synthesizes the rows, deriving ctr/cvr from effective_seed.
    std::vector<ImpressionOpportunity> load_rows(std::uint64_t effective_seed) const;

    void validate() const;
};

AlgorithmSpec algorithm_spec_from_json(const nlohmann::json& j);
nlohmann::json algorithm_spec_to_json(const AlgorithmSpec& spec);

ArenaConfig arena_config_from_json(const nlohmann::json& j);

// Reads the file and also reports the FNV-1a digest of its raw bytes, which
// stamps every artifact the run produces.
struct LoadedConfig {
    ArenaConfig config;
    std::string digest;
};
LoadedConfig load_arena_config(const std::string& path);

SearchSpace search_space_from_json(const nlohmann::json& j);
SearchSpace load_search_space(const std::string& path);

}  // namespace arena
