#include "arena/config.hpp"

#include <fstream>
#include <sstream>

namespace arena {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError("config: " + what); }

double require_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) bad(std::string("missing numeric '") + key + "'");
    return j[key].get<double>();
}

}  // namespace

AlgorithmSpec algorithm_spec_from_json(const json& j) {
    if (!j.is_object()) bad("algorithm spec must be an object");
    AlgorithmSpec spec;
    if (!j.contains("kind") || !j["kind"].is_string()) bad("algorithm spec needs a 'kind' string");
    spec.kind = algorithm_kind_from_string(j["kind"].get<std::string>());
    if (j.contains("target_metric")) {
        spec.target_metric = target_metric_from_string(j["target_metric"].get<std::string>());
    }
    if (j.contains("hyperparameters")) {
        if (!j["hyperparameters"].is_object()) bad("'hyperparameters' must be an object");
        for (const auto& [name, value] : j["hyperparameters"].items()) {
            if (!value.is_number()) bad("hyperparameter '" + name + "' must be a number");
            spec.hyperparameters[name] = value.get<double>();
        }
    }
    if (spec.kind == AlgorithmKind::External) {
        if (!j.contains("endpoint") || !j["endpoint"].is_object()) {
            bad("external algorithm needs an 'endpoint' object");
        }
        const json& ep = j["endpoint"];
        ExternalEndpoint endpoint;
        if (ep.contains("command")) {
            if (!ep["command"].is_array() || ep["command"].empty()) {
                bad("endpoint 'command' must be a non-empty array of strings");
            }
            for (const auto& part : ep["command"]) {
                if (!part.is_string()) bad("endpoint 'command' must contain only strings");
                endpoint.command.push_back(part.get<std::string>());
            }
        }
        if (ep.contains("tcp_host")) {
            endpoint.tcp_host = ep["tcp_host"].get<std::string>();
            endpoint.tcp_port = static_cast<int>(require_number(ep, "tcp_port"));
        }
        if (endpoint.command.empty() == endpoint.tcp_host.empty()) {
            bad("endpoint needs exactly one of 'command' or 'tcp_host'");
        }
        endpoint.timeout_ms = static_cast<int>(ep.value("timeout_ms", 1000.0));
        if (endpoint.timeout_ms <= 0) bad("endpoint 'timeout_ms' must be positive");
        spec.external = std::move(endpoint);
    } else if (j.contains("endpoint")) {
        bad("'endpoint' is only valid for the external algorithm");
    }
    return spec;
}

json algorithm_spec_to_json(const AlgorithmSpec& spec) {
    json j = {{"kind", to_string(spec.kind)}, {"target_metric", to_string(spec.target_metric)}};
    if (!spec.hyperparameters.empty()) j["hyperparameters"] = spec.hyperparameters;
    if (spec.external) {
        json ep;
        if (spec.external->is_tcp()) {
            ep["tcp_host"] = spec.external->tcp_host;
            ep["tcp_port"] = spec.external->tcp_port;
        } else {
            ep["command"] = spec.external->command;
        }
        ep["timeout_ms"] = spec.external->timeout_ms;
        j["endpoint"] = std::move(ep);
    }
    return j;
}

void ArenaConfig::validate() const {
    if (dataset_path.has_value() == synthetic.has_value()) {
        bad("exactly one data source required ('dataset' or 'synthetic')");
    }
    if (n_sellers < 1) bad("'sellers.count' must be >= 1");
    if (total_timesteps < 0) bad("'total_timesteps' must be >= 0");
    if (!initial_budgets.empty() && initial_budgets.size() != 1 &&
        initial_budgets.size() != static_cast<std::size_t>(n_sellers)) {
        bad("'sellers.initial_budget' must be a scalar or one entry per seller");
    }
    if (!per_seller_algorithms.empty() &&
        per_seller_algorithms.size() != static_cast<std::size_t>(n_sellers)) {
        bad("'algorithms' must list one spec per seller");
    }
    if (threads < 0) bad("'threads' must be >= 0");
}

std::vector<SellerConfig> ArenaConfig::seller_configs() const {
    validate();
    std::vector<SellerConfig> roster;
    roster.reserve(static_cast<std::size_t>(n_sellers));
    for (int s = 1; s <= n_sellers; ++s) {
        SellerConfig cfg;
        cfg.seller_id = s;
        if (initial_budgets.size() == 1) {
            cfg.initial_budget = initial_budgets.front();
        } else if (!initial_budgets.empty()) {
            cfg.initial_budget = initial_budgets[static_cast<std::size_t>(s - 1)];
        }
        cfg.cpc_bound = cpc_bound;
        cfg.cpa_bound = cpa_bound;
        cfg.algorithm = per_seller_algorithms.empty()
                            ? fleet_algorithm
                            : per_seller_algorithms[static_cast<std::size_t>(s - 1)];
        cfg.validate();
        roster.push_back(std::move(cfg));
    }
    return roster;
}

std::vector<ImpressionOpportunity> ArenaConfig::load_rows(std::uint64_t effective_seed) const {
    validate();
    if (dataset_path) return load_dataset(*dataset_path, effective_seed);
    SyntheticConfig cfg = *synthetic;
    cfg.seed = synthetic_seed.value_or(effective_seed);
    return generate_synthetic(cfg, effective_seed);
}

ArenaConfig arena_config_from_json(const json& j) {
    if (!j.is_object()) bad("top level must be a JSON object");
    ArenaConfig cfg;

    if (j.contains("dataset")) cfg.dataset_path = j["dataset"].get<std::string>();
    if (j.contains("synthetic")) {
        const json& s = j["synthetic"];
        if (!s.is_object()) bad("'synthetic' must be an object");
        SyntheticConfig synth;
        synth.n_sellers = static_cast<int>(s.value("n_sellers", 48.0));
        synth.n_timesteps = static_cast<int>(s.value("n_timesteps", 48.0));
        synth.auctions_per_seller_timestep =
            static_cast<int>(s.value("auctions_per_seller_timestep", 500.0));
        synth.p_log_mean = s.value("p_log_mean", synth.p_log_mean);
        synth.p_log_sigma = s.value("p_log_sigma", synth.p_log_sigma);
        synth.wp_log_mean = s.value("wp_log_mean", synth.wp_log_mean);
        synth.wp_log_sigma = s.value("wp_log_sigma", synth.wp_log_sigma);
        if (s.contains("seed")) cfg.synthetic_seed = s["seed"].get<std::uint64_t>();
        cfg.synthetic = synth;
    }

    if (j.contains("sellers")) {
        const json& sellers = j["sellers"];
        if (!sellers.is_object()) bad("'sellers' must be an object");
        cfg.n_sellers = static_cast<int>(sellers.value("count", 48.0));
        if (sellers.contains("initial_budget")) {
            const json& budget = sellers["initial_budget"];
            if (budget.is_array()) {
                for (const auto& b : budget) cfg.initial_budgets.push_back(b.get<double>());
            } else {
                cfg.initial_budgets.push_back(budget.get<double>());
            }
        }
        cfg.cpc_bound = sellers.value("cpc_bound", 0.5);
        cfg.cpa_bound = sellers.value("cpa_bound", 0.05);
    } else if (cfg.synthetic) {
        cfg.n_sellers = cfg.synthetic->n_sellers;
    }

    if (j.contains("algorithm") && j.contains("algorithms")) {
        bad("give either 'algorithm' (fleet-wide) or 'algorithms' (per seller), not both");
    }
    if (j.contains("algorithm")) {
        cfg.fleet_algorithm = algorithm_spec_from_json(j["algorithm"]);
    } else if (j.contains("algorithms")) {
        if (!j["algorithms"].is_array()) bad("'algorithms' must be an array");
        for (const auto& spec : j["algorithms"]) {
            cfg.per_seller_algorithms.push_back(algorithm_spec_from_json(spec));
        }
    } else {
        bad("missing 'algorithm' (or 'algorithms')");
    }

    if (j.contains("total_timesteps")) {
        cfg.total_timesteps = static_cast<int>(j["total_timesteps"].get<double>());
    } else if (cfg.synthetic) {
        cfg.total_timesteps = cfg.synthetic->n_timesteps;
    }

    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.threads = static_cast<int>(j.value("threads", 0.0));

    cfg.validate();
    return cfg;
}

LoadedConfig load_arena_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string bytes = buffer.str();

    const json doc = json::parse(bytes, nullptr, false);
    if (doc.is_discarded()) throw ParseError(path + ": invalid JSON");
    try {
        return {arena_config_from_json(doc), fnv1a_hex(bytes)};
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

SearchSpace search_space_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("search space: top level must be a JSON object");
    SearchSpace space;
    const std::string kind = j.value("kind", std::string("grid"));
    if (kind == "grid") {
        space.kind = SearchSpace::Kind::Grid;
    } else if (kind == "random") {
        space.kind = SearchSpace::Kind::Random;
    } else {
        throw ConfigError("search space: unknown kind '" + kind + "'");
    }
    space.budget = static_cast<int>(j.value("budget", -1.0));

    if (j.contains("params")) {
        if (!j["params"].is_object()) throw ConfigError("search space: 'params' must be an object");
        for (const auto& [name, domain] : j["params"].items()) {
            ParamRange range;
            if (domain.contains("grid")) {
                if (!domain["grid"].is_array()) {
                    throw ConfigError("search space: parameter '" + name +
                                      "' grid must be an array");
                }
                for (const auto& v : domain["grid"]) range.grid.push_back(v.get<double>());
            } else {
                range.low = require_number(domain, "low");
                range.high = require_number(domain, "high");
                range.count = static_cast<int>(domain.value("count", 1.0));
                const std::string scale = domain.value("scale", std::string("linear"));
                if (scale == "log") {
                    range.scale = ParamRange::Scale::Log;
                } else if (scale != "linear") {
                    throw ConfigError("search space: parameter '" + name + "' unknown scale '" +
                                      scale + "'");
                }
            }
            range.validate(name);
            space.params[name] = std::move(range);
        }
    }
    return space;
}

SearchSpace load_search_space(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    const json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ParseError(path + ": invalid JSON");
    try {
        return search_space_from_json(doc);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace arena
