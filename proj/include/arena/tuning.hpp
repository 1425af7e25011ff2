#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arena/env.hpp"
#include "arena/metrics.hpp"

namespace arena {

// One hyperparameter's search domain: an explicit value list, or a
// (low, high, count, scale) range materialized on demand.
struct ParamRange {
    enum class Scale { Linear, Log };

    std::vector<double> grid;  // non-empty -> explicit list
    double low = 0.0;
    double high = 0.0;
    int count = 0;
    Scale scale = Scale::Linear;

    bool is_grid() const { return !grid.empty(); }
    void validate(const std::string& name) const;
    std::vector<double> materialize() const;  // grid, or count spaced points
    double sample(RandomStream& rng) const;   // random-search draw
};

struct SearchSpace {
    enum class Kind { Grid, Random };

    Kind kind = Kind::Grid;
    int budget = -1;  // max evaluations; -1 = full grid (required for random)
    std::map<std::string, ParamRange> params;
};

using Candidate = std::map<std::string, double>;

// Deterministic candidate list: grids enumerate the cartesian product in
// sorted-name odometer order (last name fastest), random search draws
// `budget` candidates from the master seed. A space with no parameters
// yields the single empty candidate. Throws ConfigError on empty grids or a
// non-positive budget.
std::vector<Candidate> enumerate_candidates(const SearchSpace& space, std::uint64_t seed,
                                            std::uint64_t stream_key);

struct EvaluationRecord {
    int index = 0;
    Candidate candidate;
    std::optional<double> period1_target;
    double period1_cost = 0.0;
    MetricsReport period1_metrics;
};

struct TuningResult {
    AlgorithmSpec base_spec;
    TargetMetric target = TargetMetric::Clicks;
    std::uint64_t seed = 0;
    std::string dataset_digest;
    std::string config_digest;
    Candidate best;
    std::optional<double> period1_target_value;
    MetricsReport period2_metrics;
    std::vector<EvaluationRecord> log;
};

// Roster and episode settings shared by every candidate evaluation.
struct TuningSettings {
    std::vector<SellerConfig> roster;  // algorithm field is overridden per candidate
    int total_timesteps = 48;
    int threads = 1;
    std::string config_digest;
    std::string dataset_digest;
};

// Target-metric value of a report; null when the metric is undefined.
std::optional<double> metric_value(const MetricsReport& report, TargetMetric target);

// true when `a` beats `b` for the target (RMSE minimized, others maximized;
// null never beats a defined value)
bool better_target(const std::optional<double>& a, const std::optional<double>& b,
                   TargetMetric target);

// The experimental protocol: every candidate gets a full period-1 episode
// under the same seed; the optimum (ties: lower period-1 cost, then
// lexicographically smaller candidate) wins; one period-2 episode with the
// winner produces the reported metrics. Period-2 data never influences the
// selection.
TuningResult tune(const AlgorithmSpec& spec, const SearchSpace& space,
                  std::span<const ImpressionOpportunity> data, TargetMetric target,
                  std::uint64_t seed, const TuningSettings& settings);

// Built-in per-algorithm search spaces used when no space file is given.
SearchSpace default_space(AlgorithmKind kind);

struct CrossTableRow {
    std::string target;
    std::string algorithm;
    MetricsReport metrics;  // winner's period-2 report
};

// Merges tuned results into the algorithms x metrics matrix, one row per
// (target, algorithm). Refuses results whose seed or dataset digest differ.
std::vector<CrossTableRow> cross_metric_table(const std::vector<TuningResult>& results);

// --- serialization ---

std::string tuning_result_to_json(const TuningResult& result);
TuningResult tuning_result_from_json_file(const std::string& path);

void write_evaluation_log_csv(const std::string& path, const TuningResult& result);
void write_cross_table_csv(const std::string& path, const std::vector<CrossTableRow>& rows);
std::string cross_table_to_json(const std::vector<CrossTableRow>& rows);

}  // namespace arena
