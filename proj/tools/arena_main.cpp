#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <json.hpp>

#include "arena/config.hpp"
#include "arena/dataset.hpp"
#include "arena/env.hpp"
#include "arena/metrics.hpp"
#include "arena/tuning.hpp"

namespace fs = std::filesystem;
using arena::ConfigError;
using arena::ParseError;
using json = nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
};

struct ResolvedRun {
    arena::ArenaConfig config;
    std::string config_digest;
    std::uint64_t seed = 0;
    fs::path out_dir;
};

ResolvedRun resolve(const CommonArgs& args) {
    ResolvedRun run;
    auto loaded = arena::load_arena_config(args.config_path);
    run.config = std::move(loaded.config);
    run.config_digest = loaded.digest;
    if (args.seed) run.config.seed = *args.seed;
    if (!run.config.seed) {
        throw ConfigError("config: seed required (set 'seed' or pass --seed)");
    }
    run.seed = *run.config.seed;
    if (args.out_dir) run.config.output_dir = *args.out_dir;
    if (args.threads) run.config.threads = *args.threads;
    run.out_dir = run.config.output_dir;
    fs::create_directories(run.out_dir);
    return run;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path.string() + ": cannot open file for writing");
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    if (!out) throw ParseError(path.string() + ": write failed");
}

std::span<const arena::ImpressionOpportunity> period_slice(
    const std::vector<arena::ImpressionOpportunity>& rows, int period) {
    const auto begin = std::partition_point(
        rows.begin(), rows.end(),
        [&](const arena::ImpressionOpportunity& r) { return r.period < period; });
    const auto end = std::partition_point(
        begin, rows.end(),
        [&](const arena::ImpressionOpportunity& r) { return r.period == period; });
    return {std::to_address(begin), static_cast<std::size_t>(end - begin)};
}

int cmd_run(const CommonArgs& args) {
    ResolvedRun run = resolve(args);
    const auto rows = run.config.load_rows(run.seed);
    const auto roster = run.config.seller_configs();
    const auto bounds = arena::extract_bid_bounds(rows, 1);
    const std::string data_digest = arena::dataset_digest(rows);

    json combined;
    for (int period = 1; period <= 2; ++period) {
        arena::EpisodeParams params;
        params.period = period;
        params.total_timesteps = run.config.total_timesteps;
        params.seed = run.seed;
        params.threads = run.config.threads;
        params.config_digest = run.config_digest;
        params.dataset_digest = data_digest;

        const auto trace = arena::run_episode(roster, period_slice(rows, period), params, bounds);
        const auto report = arena::compute_metrics(trace);
        const std::string tag = "period" + std::to_string(period);

        arena::write_trace_csv((run.out_dir / ("trace_" + tag + ".csv")).string(), trace);
        arena::write_episode_header_json((run.out_dir / ("episode_" + tag + ".json")).string(),
                                         trace);
        arena::write_metrics_csv((run.out_dir / ("metrics_" + tag + ".csv")).string(), report);
        combined[tag] = arena::metrics_report_to_json(report);

        std::cout << tag << ": clicks=" << report.clicks << " cnv=" << report.conversions
                  << " rmse=" << report.rmse << '\n';
    }
    write_text(run.out_dir / "metrics.json", combined.dump(2));
    return 0;
}

int cmd_tune(const CommonArgs& args, const std::string& target_name,
             const std::optional<std::string>& space_path) {
    ResolvedRun run = resolve(args);
    if (!run.config.per_seller_algorithms.empty()) {
        throw ConfigError("tune: requires a fleet-wide 'algorithm'");
    }
    const arena::TargetMetric target = arena::target_metric_from_string(target_name);
    const arena::SearchSpace space = space_path
                                         ? arena::load_search_space(*space_path)
                                         : arena::default_space(run.config.fleet_algorithm.kind);

    const auto rows = run.config.load_rows(run.seed);

    arena::TuningSettings settings;
    settings.roster = run.config.seller_configs();
    settings.total_timesteps = run.config.total_timesteps;
    settings.threads = run.config.threads;
    settings.config_digest = run.config_digest;
    settings.dataset_digest = arena::dataset_digest(rows);

    const arena::TuningResult result =
        arena::tune(run.config.fleet_algorithm, space, rows, target, run.seed, settings);

    const std::string stem =
        std::string("tuning_") + arena::to_string(result.base_spec.kind) + "_" + target_name;
    write_text(run.out_dir / (stem + ".json"), arena::tuning_result_to_json(result));
    arena::write_evaluation_log_csv((run.out_dir / ("eval_log_" + stem.substr(7) + ".csv")).string(),
                                    result);

    std::cout << "best " << json(result.best).dump() << " p1_" << target_name << "=";
    if (result.period1_target_value) {
        std::cout << *result.period1_target_value;
    } else {
        std::cout << "null";
    }
    std::cout << " p2_clicks=" << result.period2_metrics.clicks
              << " p2_rmse=" << result.period2_metrics.rmse << '\n';
    return 0;
}

int cmd_synth(const std::string& config_path, const std::string& out_path,
              std::optional<std::uint64_t> seed_override) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ParseError(config_path + ": cannot open file");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ParseError(config_path + ": invalid JSON");
    if (doc.contains("synthetic")) doc = doc["synthetic"];  // accept a full arena config too

    arena::SyntheticConfig cfg;
    cfg.n_sellers = static_cast<int>(doc.value("n_sellers", 48.0));
    cfg.n_timesteps = static_cast<int>(doc.value("n_timesteps", 48.0));
    cfg.auctions_per_seller_timestep =
        static_cast<int>(doc.value("auctions_per_seller_timestep", 500.0));
    cfg.p_log_mean = doc.value("p_log_mean", cfg.p_log_mean);
    cfg.p_log_sigma = doc.value("p_log_sigma", cfg.p_log_sigma);
    cfg.wp_log_mean = doc.value("wp_log_mean", cfg.wp_log_mean);
    cfg.wp_log_sigma = doc.value("wp_log_sigma", cfg.wp_log_sigma);
    cfg.seed = doc.value("seed", std::uint64_t{0});
    if (seed_override) cfg.seed = *seed_override;

    const auto rows = arena::generate_synthetic(cfg, cfg.seed);
    arena::write_dataset_csv(out_path, rows);
    std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
    return 0;
}

int cmd_report(const std::string& traces_dir, const std::optional<std::string>& out_dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(traces_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("tuning_", 0) == 0 &&
            name.size() > 5 && name.substr(name.size() - 5) == ".json") {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) {
        throw ConfigError("report: no tuning_*.json files in " + traces_dir);
    }
    std::sort(files.begin(), files.end());

    std::vector<arena::TuningResult> results;
    results.reserve(files.size());
    for (const auto& file : files) {
        results.push_back(arena::tuning_result_from_json_file(file.string()));
    }
    const auto table = arena::cross_metric_table(results);

    const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(traces_dir);
    fs::create_directories(dir);
    arena::write_cross_table_csv((dir / "cross_table.csv").string(), table);
    write_text(dir / "cross_table.json", arena::cross_table_to_json(table));
    std::cout << "cross-metric table over " << results.size() << " tuned runs -> "
              << (dir / "cross_table.csv").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"autobid-arena: deterministic auction-replay benchmark for autobidding algorithms"};
    app.require_subcommand(1);

    CommonArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "simulate both periods and write traces + metrics");
    run_cmd->add_option("--config", run_args.config_path, "arena config JSON")->required();
    run_cmd->add_option("--seed", run_args.seed, "override the config seed");
    run_cmd->add_option("--out", run_args.out_dir, "output directory");
    run_cmd->add_option("--threads", run_args.threads, "worker threads (0 = all cores)");

    CommonArgs tune_args;
    std::string tune_target;
    std::optional<std::string> tune_space;
    auto* tune_cmd = app.add_subcommand("tune", "hyperparameter search on period 1, report period 2");
    tune_cmd->add_option("--config", tune_args.config_path, "arena config JSON")->required();
    tune_cmd->add_option("--target", tune_target, "target metric")
        ->required()
        ->check(CLI::IsMember({"awr", "clicks", "cnv", "rmse"}));
    tune_cmd->add_option("--space", tune_space, "search space JSON (default: built-in grid)");
    tune_cmd->add_option("--seed", tune_args.seed, "override the config seed");
    tune_cmd->add_option("--out", tune_args.out_dir, "output directory");
    tune_cmd->add_option("--threads", tune_args.threads, "worker threads (0 = all cores)");

    std::string synth_config;
    std::string synth_out;
    std::optional<std::uint64_t> synth_seed;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset CSV");
    synth_cmd->add_option("--config", synth_config, "synthetic config JSON")->required();
    synth_cmd->add_option("--out", synth_out, "output CSV path")->required();
    synth_cmd->add_option("--seed", synth_seed, "override the config seed");

    std::string report_dir;
    std::optional<std::string> report_out;
    auto* report_cmd = app.add_subcommand("report", "merge tuning results into the cross-metric table");
    report_cmd->add_option("--traces", report_dir, "directory holding tuning_*.json")->required();
    report_cmd->add_option("--out", report_out, "output directory (default: --traces)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(run_args);
        if (tune_cmd->parsed()) return cmd_tune(tune_args, tune_target, tune_space);
        if (synth_cmd->parsed()) return cmd_synth(synth_config, synth_out, synth_seed);
        if (report_cmd->parsed()) return cmd_report(report_dir, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
