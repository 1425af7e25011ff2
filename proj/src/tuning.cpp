#include "arena/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "arena/text.hpp"

namespace arena {

using json = nlohmann::json;

void ParamRange::validate(const std::string& name) const {
    if (is_grid()) {
        for (double v : grid) {
            if (!std::isfinite(v)) {
                throw ConfigError("search space: parameter '" + name + "' has a non-finite value");
            }
        }
        return;
    }
    if (!(low < high)) {
        throw ConfigError("search space: parameter '" + name + "' needs low < high");
    }
    if (count < 1) throw ConfigError("search space: parameter '" + name + "' needs count >= 1");
    if (scale == Scale::Log && !(low > 0.0)) {
        throw ConfigError("search space: parameter '" + name + "' log scale needs low > 0");
    }
}

std::vector<double> ParamRange::materialize() const {
    if (is_grid()) return grid;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(count));
    if (count == 1) {
        values.push_back(low);
        return values;
    }
    if (scale == Scale::Log) {
        const double llo = std::log(low);
        const double lhi = std::log(high);
        for (int i = 0; i < count; ++i) {
            values.push_back(std::exp(llo + (lhi - llo) * i / (count - 1)));
        }
    } else {
        for (int i = 0; i < count; ++i) {
            values.push_back(low + (high - low) * i / (count - 1));
        }
    }
    return values;
}

double ParamRange::sample(RandomStream& rng) const {
    if (is_grid()) {
        const auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(grid.size()));
        return grid[std::min(idx, grid.size() - 1)];
    }
    if (scale == Scale::Log) {
        return std::exp(rng.uniform(std::log(low), std::log(high)));
    }
    return rng.uniform(low, high);
}

std::vector<Candidate> enumerate_candidates(const SearchSpace& space, std::uint64_t seed,
                                            std::uint64_t stream_key) {
    for (const auto& [name, range] : space.params) range.validate(name);
    if (space.budget == 0) throw ConfigError("search space: evaluation budget is 0");

    std::vector<Candidate> out;
    if (space.kind == SearchSpace::Kind::Random) {
        if (space.budget < 1) {
            throw ConfigError("search space: random search needs a positive budget");
        }
        RandomStream rng(seed, RngPurpose::Tuning, stream_key);
        for (int i = 0; i < space.budget; ++i) {
            Candidate c;
            for (const auto& [name, range] : space.params) c[name] = range.sample(rng);
            out.push_back(std::move(c));
        }
        return out;
    }

    // grid: odometer over sorted names, last name fastest
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
    for (const auto& [name, range] : space.params) {
        names.push_back(name);
        values.push_back(range.materialize());
        if (values.back().empty()) {
            throw ConfigError("search space: parameter '" + name + "' has an empty grid");
        }
    }

    const std::size_t limit =
        space.budget > 0 ? static_cast<std::size_t>(space.budget) : SIZE_MAX;
    std::vector<std::size_t> idx(names.size(), 0);
    for (;;) {
        Candidate c;
        for (std::size_t k = 0; k < names.size(); ++k) c[names[k]] = values[k][idx[k]];
        out.push_back(std::move(c));
        if (out.size() >= limit) break;
        std::size_t k = names.size();
        while (k > 0) {
            --k;
            if (++idx[k] < values[k].size()) break;
            idx[k] = 0;
            if (k == 0) return out;  // odometer wrapped: full product done
        }
        if (names.empty()) break;  // no parameters: single empty candidate
    }
    return out;
}

std::optional<double> metric_value(const MetricsReport& report, TargetMetric target) {
    switch (target) {
        case TargetMetric::Awr:
            return report.awr;
        case TargetMetric::Clicks:
            return static_cast<double>(report.clicks);
        case TargetMetric::Cnv:
            return static_cast<double>(report.conversions);
        case TargetMetric::Rmse:
            return report.rmse;
    }
    return std::nullopt;
}

bool better_target(const std::optional<double>& a, const std::optional<double>& b,
                   TargetMetric target) {
    if (!a) return false;
    if (!b) return true;
    return target == TargetMetric::Rmse ? *a < *b : *a > *b;
}

namespace {

double episode_total_cost(const EpisodeTrace& trace) {
    if (trace.total_timesteps == 0) return 0.0;
    double total = 0.0;
    const auto T = static_cast<std::size_t>(trace.total_timesteps);
    for (std::size_t i = 0; i < trace.seller_ids.size(); ++i) {
        total += trace.initial_budgets[i] - trace.rows[i * T + T - 1].balance;
    }
    return total;
}

bool lexicographically_before(const Candidate& a, const Candidate& b) {
    // identical key sets by construction; compare value sequences
    auto ia = a.begin();
    auto ib = b.begin();
    for (; ia != a.end() && ib != b.end(); ++ia, ++ib) {
        if (ia->second < ib->second) return true;
        if (ia->second > ib->second) return false;
    }
    return false;
}

AlgorithmSpec merge_candidate(const AlgorithmSpec& base, const Candidate& candidate,
                              TargetMetric target) {
    AlgorithmSpec merged = base;
    merged.target_metric = target;
    for (const auto& [name, value] : candidate) merged.hyperparameters[name] = value;
    return merged;
}

std::vector<SellerConfig> roster_with(const std::vector<SellerConfig>& roster,
                                      const AlgorithmSpec& spec) {
    std::vector<SellerConfig> out = roster;
    for (auto& seller : out) seller.algorithm = spec;
    return out;
}

}  // namespace

TuningResult tune(const AlgorithmSpec& spec, const SearchSpace& space,
                  std::span<const ImpressionOpportunity> data, TargetMetric target,
                  std::uint64_t seed, const TuningSettings& settings) {
    const auto candidates =
        enumerate_candidates(space, seed, static_cast<std::uint64_t>(spec.kind));
    if (candidates.empty()) throw ConfigError("search space produced no candidates");

    // canonical ordering puts all period-1 rows first
    const auto split = std::partition_point(
        data.begin(), data.end(), [](const ImpressionOpportunity& r) { return r.period == 1; });
    const std::span<const ImpressionOpportunity> p1(data.begin(), split);
    const std::span<const ImpressionOpportunity> p2(split, data.end());
    const auto bounds = extract_bid_bounds(data, 1);

    EpisodeParams params1;
    params1.period = 1;
    params1.total_timesteps = settings.total_timesteps;
    params1.seed = seed;
    params1.threads = settings.threads;
    params1.config_digest = settings.config_digest;
    params1.dataset_digest = settings.dataset_digest;

    TuningResult result;
    result.base_spec = spec;
    result.base_spec.target_metric = target;
    result.target = target;
    result.seed = seed;
    result.dataset_digest = settings.dataset_digest;
    result.config_digest = settings.config_digest;

    // target first, then the tie-breaks: frugal period-1 spend, then the
    // lexicographically smaller candidate
    const auto beats = [&](const EvaluationRecord& a, const EvaluationRecord& b) {
        if (better_target(a.period1_target, b.period1_target, target)) return true;
        if (better_target(b.period1_target, a.period1_target, target)) return false;
        if (a.period1_cost != b.period1_cost) return a.period1_cost < b.period1_cost;
        return lexicographically_before(a.candidate, b.candidate);
    };

    int best_index = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const AlgorithmSpec merged = merge_candidate(spec, candidates[i], target);
        const EpisodeTrace trace =
            run_episode(roster_with(settings.roster, merged), p1, params1, bounds);

        EvaluationRecord record;
        record.index = static_cast<int>(i);
        record.candidate = candidates[i];
        record.period1_metrics = compute_metrics(trace);
        record.period1_target = metric_value(record.period1_metrics, target);
        record.period1_cost = episode_total_cost(trace);
        result.log.push_back(std::move(record));

        if (best_index < 0 ||
            beats(result.log.back(), result.log[static_cast<std::size_t>(best_index)])) {
            best_index = static_cast<int>(i);
        }
    }

    const auto& winner = result.log[static_cast<std::size_t>(best_index)];
    result.best = winner.candidate;
    result.period1_target_value = winner.period1_target;

    EpisodeParams params2 = params1;
    params2.period = 2;
    const AlgorithmSpec winning_spec = merge_candidate(spec, result.best, target);
    const EpisodeTrace trace2 =
        run_episode(roster_with(settings.roster, winning_spec), p2, params2, bounds);
    result.period2_metrics = compute_metrics(trace2);
    return result;
}

// ---------------------------------------------------------------------------
// Default search spaces. Grids are sized so a full tuning sweep of every
// algorithm stays in CI-friendly time while covering the scale range each
// formula is sensitive to.
// ---------------------------------------------------------------------------

namespace {

ParamRange grid_of(std::vector<double> values) {
    ParamRange r;
    r.grid = std::move(values);
    return r;
}

ParamRange log_range(double low, double high, int count) {
    ParamRange r;
    r.low = low;
    r.high = high;
    r.count = count;
    r.scale = ParamRange::Scale::Log;
    return r;
}

// sign-symmetric log grid: {-high..-low, 0, low..high}
ParamRange symlog_grid(double low, double high, int per_side) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(2 * per_side + 1));
    const auto side = log_range(low, high, per_side).materialize();
    for (auto it = side.rbegin(); it != side.rend(); ++it) values.push_back(-*it);
    values.push_back(0.0);
    for (double v : side) values.push_back(v);
    return grid_of(std::move(values));
}

}  // namespace

SearchSpace default_space(AlgorithmKind kind) {
    SearchSpace space;
    switch (kind) {
        case AlgorithmKind::Constant:
            space.params["bid0"] = grid_of(
                {0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0});
            break;
        case AlgorithmKind::Random:
            break;  // no hyperparameters: single candidate
        case AlgorithmKind::Linear:
            space.params["alpha"] = log_range(1.0, 1e4, 13);
            break;
        case AlgorithmKind::CostMax:
            space.params["b"] =
                grid_of({0.0, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 12.0});
            break;
        case AlgorithmKind::Ortb1:
        case AlgorithmKind::Ortb2:
            space.params["c"] = log_range(0.1, 20.0, 5);
            space.params["lambda"] = log_range(1e-4, 1.0, 6);
            break;
        case AlgorithmKind::Opt:
            space.params["p"] = grid_of({0.05, 0.1, 0.3, 1.0, 3.0, 10.0});
            space.params["q"] = grid_of({0.0, 0.1, 0.3, 1.0, 3.0});
            break;
        case AlgorithmKind::Broi:
            space.params["eta"] = grid_of({0.0, 0.01, 0.05, 0.2, 1.0, 5.0});
            space.params["mu0"] = grid_of({0.0, 0.5, 2.0});
            break;
        case AlgorithmKind::Cb:
            space.params["a_scale"] = log_range(1.0, 1e4, 7);
            space.params["eta"] = grid_of({0.0, 0.2, 1.0});
            space.params["lambda0"] = grid_of({0.0, 1.0});
            break;
        case AlgorithmKind::Fb:
            space.params["lambda1"] = symlog_grid(1e-5, 1e-3, 3);
            space.params["lambda2"] = symlog_grid(1e-6, 1e-4, 2);
            space.params["lambda3"] = symlog_grid(1e-5, 1e-3, 2);
            break;
        case AlgorithmKind::FbWl:
            space.params["lambda4"] = symlog_grid(1e-7, 1e-3, 6);
            break;
        case AlgorithmKind::Mystique:
            space.params["w_s"] = symlog_grid(1e-6, 1e-3, 3);
            space.params["w_g"] = symlog_grid(1e-6, 1e-3, 3);
            break;
        case AlgorithmKind::Pid:
        case AlgorithmKind::Mpid: {
            space.params["p0"] = grid_of({0.3, 1.0, 3.0});
            space.params["q0"] = grid_of({0.3});
            space.params["kp_p"] = grid_of({0.0, 1e-4, 1e-3});
            space.params["ki_p"] = grid_of({0.0, 1e-5});
            space.params["kd_p"] = grid_of({0.0, 1e-4});
            space.params["kp_q"] = grid_of({0.0});
            space.params["ki_q"] = grid_of({0.0});
            space.params["kd_q"] = grid_of({0.0});
            if (kind == AlgorithmKind::Mpid) {
                space.params["gamma_p"] = grid_of({0.5, 1.0});
                space.params["gamma_q"] = grid_of({0.5, 1.0});
            }
            break;
        }
        case AlgorithmKind::External:
            break;  // nothing to search
    }
    return space;
}

std::vector<CrossTableRow> cross_metric_table(const std::vector<TuningResult>& results) {
    std::vector<CrossTableRow> rows;
    rows.reserve(results.size());
    for (const auto& result : results) {
        if (result.seed != results.front().seed) {
            throw ConfigError("cross-metric table: results mix different seeds");
        }
        if (result.dataset_digest != results.front().dataset_digest) {
            throw ConfigError("cross-metric table: results mix different datasets");
        }
        CrossTableRow row;
        row.target = to_string(result.target);
        row.algorithm = to_string(result.base_spec.kind);
        row.metrics = result.period2_metrics;
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const CrossTableRow& a, const CrossTableRow& b) {
        return std::tie(a.target, a.algorithm) < std::tie(b.target, b.algorithm);
    });
    return rows;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

json metrics_json(const MetricsReport& m) {
    return {
        {"awr", optional_json(m.awr)},     {"ecpm", optional_json(m.ecpm)},
        {"clicks", m.clicks},              {"ecpc", optional_json(m.ecpc)},
        {"cnv", m.conversions},            {"ecpa", optional_json(m.ecpa)},
        {"rmse", m.rmse},
    };
}

MetricsReport metrics_from_json(const json& j) {
    MetricsReport m;
    const auto opt = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        return j[key].get<double>();
    };
    m.awr = opt("awr");
    m.ecpm = opt("ecpm");
    m.clicks = j.value("clicks", std::int64_t{0});
    m.ecpc = opt("ecpc");
    m.conversions = j.value("cnv", std::int64_t{0});
    m.ecpa = opt("ecpa");
    m.rmse = j.value("rmse", 0.0);
    return m;
}

std::string metric_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("null");
}

}  // namespace

std::string tuning_result_to_json(const TuningResult& result) {
    json evaluations = json::array();
    for (const auto& record : result.log) {
        evaluations.push_back({
            {"index", record.index},
            {"params", record.candidate},
            {"p1_target", optional_json(record.period1_target)},
            {"p1_cost", record.period1_cost},
            {"p1_metrics", metrics_json(record.period1_metrics)},
        });
    }
    const json doc = {
        {"algorithm", to_string(result.base_spec.kind)},
        {"target_metric", to_string(result.target)},
        {"seed", result.seed},
        {"dataset_digest", result.dataset_digest},
        {"config_digest", result.config_digest},
        {"best", result.best},
        {"period1_target_value", optional_json(result.period1_target_value)},
        {"period2_metrics", metrics_json(result.period2_metrics)},
        {"evaluations", evaluations},
    };
    return doc.dump(2);
}

TuningResult tuning_result_from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    const json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ParseError(path + ": not a JSON object");

    TuningResult result;
    try {
        result.base_spec.kind = algorithm_kind_from_string(doc.at("algorithm").get<std::string>());
        result.target = target_metric_from_string(doc.at("target_metric").get<std::string>());
        result.seed = doc.at("seed").get<std::uint64_t>();
        result.dataset_digest = doc.value("dataset_digest", "");
        result.config_digest = doc.value("config_digest", "");
        for (const auto& [key, value] : doc.at("best").items()) {
            result.best[key] = value.get<double>();
        }
        if (doc.contains("period1_target_value") && !doc["period1_target_value"].is_null()) {
            result.period1_target_value = doc["period1_target_value"].get<double>();
        }
        result.period2_metrics = metrics_from_json(doc.at("period2_metrics"));
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return result;
}

void write_evaluation_log_csv(const std::string& path, const TuningResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TraceError(path + ": cannot open file for writing");

    std::vector<std::string> names;
    if (!result.log.empty()) {
        for (const auto& [name, value] : result.log.front().candidate) names.push_back(name);
    }
    out << "index";
    for (const auto& name : names) out << ',' << name;
    out << ",p1_target,p1_cost,p1_awr,p1_ecpm,p1_clicks,p1_ecpc,p1_cnv,p1_ecpa,p1_rmse\n";
    for (const auto& record : result.log) {
        out << record.index;
        for (const auto& name : names) out << ',' << format_double(record.candidate.at(name));
        const auto& m = record.period1_metrics;
        out << ',' << metric_cell(record.period1_target) << ',' << format_double(record.period1_cost)
            << ',' << metric_cell(m.awr) << ',' << metric_cell(m.ecpm) << ',' << m.clicks << ','
            << metric_cell(m.ecpc) << ',' << m.conversions << ',' << metric_cell(m.ecpa) << ','
            << format_double(m.rmse) << '\n';
    }
    if (!out) throw TraceError(path + ": write failed");
}

void write_cross_table_csv(const std::string& path, const std::vector<CrossTableRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TraceError(path + ": cannot open file for writing");
    out << "target,algorithm,awr,ecpm,clicks,ecpc,cnv,ecpa,rmse\n";
    for (const auto& row : rows) {
        const auto& m = row.metrics;
        out << row.target << ',' << row.algorithm << ',' << metric_cell(m.awr) << ','
            << metric_cell(m.ecpm) << ',' << m.clicks << ',' << metric_cell(m.ecpc) << ','
            << m.conversions << ',' << metric_cell(m.ecpa) << ',' << format_double(m.rmse) << '\n';
    }
    if (!out) throw TraceError(path + ": write failed");
}

std::string cross_table_to_json(const std::vector<CrossTableRow>& rows) {
    json arr = json::array();
    for (const auto& row : rows) {
        json entry = metrics_json(row.metrics);
        entry["target"] = row.target;
        entry["algorithm"] = row.algorithm;
        arr.push_back(std::move(entry));
    }
    return arr.dump(2);
}

}  // namespace arena
