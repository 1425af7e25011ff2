#include <cstdio>
#include <fstream>
#include <functional>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "arena/config.hpp"
#include "arena/dataset.hpp"
#include "arena/types.hpp"

using namespace arena;
using nlohmann::json;

namespace {

struct TempFile {
    std::string path;

    TempFile(std::string name, const std::string& contents) : path(std::move(name)) {
        std::ofstream out(path, std::ios::binary);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

json minimal_config() {
    return json{
        {"synthetic", {{"n_sellers", 3}, {"n_timesteps", 4}, {"auctions_per_seller_timestep", 5}}},
        {"algorithm", {{"kind", "constant"}, {"hyperparameters", {{"bid0", 0.1}}}}},
        {"seed", 7},
    };
}

}  // namespace

TEST_CASE("algorithm spec parses kind, target and hyperparameters") {
    const AlgorithmSpec minimal = algorithm_spec_from_json(json{{"kind", "linear"}});
    CHECK(minimal.kind == AlgorithmKind::Linear);
    CHECK(minimal.target_metric == TargetMetric::Clicks);
    CHECK(minimal.hyperparameters.empty());
    CHECK_FALSE(minimal.external.has_value());

    const AlgorithmSpec full = algorithm_spec_from_json(json{
        {"kind", "pid"},
        {"target_metric", "rmse"},
        {"hyperparameters", {{"p0", 1.0}, {"kp_p", 1e-3}}},
    });
    CHECK(full.kind == AlgorithmKind::Pid);
    CHECK(full.target_metric == TargetMetric::Rmse);
    CHECK(full.hyperparameters.at("p0") == 1.0);
    CHECK(full.hyperparameters.at("kp_p") == 1e-3);
}

TEST_CASE("algorithm spec rejections") {
    CHECK_THROWS_AS((void)algorithm_spec_from_json(json::array()), ConfigError);
    CHECK_THROWS_AS((void)algorithm_spec_from_json(json{{"target_metric", "clicks"}}),
                    ConfigError);
    CHECK_THROWS_AS((void)algorithm_spec_from_json(json{{"kind", "gradient_sorcery"}}),
                    ConfigError);
    CHECK_THROWS_AS((void)algorithm_spec_from_json(
                        json{{"kind", "linear"}, {"hyperparameters", {{"alpha", "high"}}}}),
                    ConfigError);
    CHECK_THROWS_AS((void)algorithm_spec_from_json(json{{"kind", "linear"}, {"target_metric", 3}}),
                    json::exception);

    // endpoint wiring is exclusive to the external kind
    const std::string misplaced = error_of([&] {
        (void)algorithm_spec_from_json(
            json{{"kind", "linear"}, {"endpoint", {{"command", {"./bidder"}}}}});
    });
    CHECK(misplaced.find("only valid for the external algorithm") != std::string::npos);
}

TEST_CASE("external endpoints take a command or a tcp address, never both") {
    const AlgorithmSpec child = algorithm_spec_from_json(json{
        {"kind", "external"},
        {"endpoint", {{"command", {"./bidder", "--bid", "0.3"}}}},
    });
    REQUIRE(child.external.has_value());
    CHECK((child.external->command ==
           std::vector<std::string>{"./bidder", "--bid", "0.3"}));
    CHECK_FALSE(child.external->is_tcp());
    CHECK(child.external->timeout_ms == 1000);

    const AlgorithmSpec tcp = algorithm_spec_from_json(json{
        {"kind", "external"},
        {"endpoint", {{"tcp_host", "127.0.0.1"}, {"tcp_port", 9009}, {"timeout_ms", 250}}},
    });
    REQUIRE(tcp.external.has_value());
    CHECK(tcp.external->is_tcp());
    CHECK(tcp.external->tcp_host == "127.0.0.1");
    CHECK(tcp.external->tcp_port == 9009);
    CHECK(tcp.external->timeout_ms == 250);

    CHECK_THROWS_AS((void)algorithm_spec_from_json(json{{"kind", "external"}}), ConfigError);
    CHECK_THROWS_AS((void)algorithm_spec_from_json(
                        json{{"kind", "external"}, {"endpoint", json::object()}}),
                    ConfigError);
    CHECK_THROWS_AS((void)algorithm_spec_from_json(
                        json{{"kind", "external"},
                             {"endpoint",
                              {{"command", {"./bidder"}}, {"tcp_host", "h"}, {"tcp_port", 1}}}}),
                    ConfigError);
    CHECK_THROWS_AS((void)algorithm_spec_from_json(
                        json{{"kind", "external"}, {"endpoint", {{"command", json::array()}}}}),
                    ConfigError);
    CHECK_THROWS_AS((void)algorithm_spec_from_json(
                        json{{"kind", "external"}, {"endpoint", {{"tcp_host", "h"}}}}),
                    ConfigError);
    CHECK_THROWS_AS(
        (void)algorithm_spec_from_json(
            json{{"kind", "external"},
                 {"endpoint", {{"command", {"./bidder"}}, {"timeout_ms", 0}}}}),
        ConfigError);
}

TEST_CASE("algorithm specs round-trip through json") {
    AlgorithmSpec spec;
    spec.kind = AlgorithmKind::External;
    spec.target_metric = TargetMetric::Cnv;
    spec.hyperparameters = {{"bid0", 0.25}};
    ExternalEndpoint ep;
    ep.tcp_host = "localhost";
    ep.tcp_port = 4444;
    ep.timeout_ms = 500;
    spec.external = ep;

    const AlgorithmSpec back = algorithm_spec_from_json(algorithm_spec_to_json(spec));
    CHECK(back.kind == spec.kind);
    CHECK(back.target_metric == spec.target_metric);
    CHECK(back.hyperparameters == spec.hyperparameters);
    REQUIRE(back.external.has_value());
    CHECK(back.external->tcp_host == "localhost");
    CHECK(back.external->tcp_port == 4444);
    CHECK(back.external->timeout_ms == 500);
}

TEST_CASE("arena config inherits dimensions from the synthetic block") {
    const ArenaConfig cfg = arena_config_from_json(minimal_config());
    CHECK_FALSE(cfg.dataset_path.has_value());
    REQUIRE(cfg.synthetic.has_value());
    CHECK(cfg.n_sellers == 3);
    CHECK(cfg.total_timesteps == 4);
    CHECK_FALSE(cfg.synthetic_seed.has_value());
    REQUIRE(cfg.seed.has_value());
    CHECK(*cfg.seed == 7);
    CHECK(cfg.threads == 0);
    CHECK(cfg.output_dir == "out");
    CHECK(cfg.fleet_algorithm.kind == AlgorithmKind::Constant);
}

TEST_CASE("explicit sellers and timesteps override the synthetic defaults") {
    json j = minimal_config();
    j["sellers"] = {{"count", 2}, {"initial_budget", 50.0}, {"cpc_bound", 0.4}, {"cpa_bound", 0.1}};
    j["total_timesteps"] = 9;
    j["threads"] = 2;
    j["output_dir"] = "elsewhere";
    const ArenaConfig cfg = arena_config_from_json(j);
    CHECK(cfg.n_sellers == 2);
    CHECK(cfg.total_timesteps == 9);
    CHECK(cfg.threads == 2);
    CHECK(cfg.output_dir == "elsewhere");

    const auto roster = cfg.seller_configs();
    REQUIRE(roster.size() == 2);
    CHECK(roster[0].seller_id == 1);
    CHECK(roster[1].seller_id == 2);
    CHECK(roster[0].initial_budget == 50.0);
    CHECK(roster[1].initial_budget == 50.0);
    CHECK(roster[0].cpc_bound == 0.4);
    CHECK(roster[0].cpa_bound == 0.1);
}

TEST_CASE("per-seller budget lists map by position") {
    json j = minimal_config();
    j["sellers"] = {{"count", 3}, {"initial_budget", {10.0, 20.0, 30.0}}};
    const auto roster = arena_config_from_json(j).seller_configs();
    REQUIRE(roster.size() == 3);
    CHECK(roster[0].initial_budget == 10.0);
    CHECK(roster[1].initial_budget == 20.0);
    CHECK(roster[2].initial_budget == 30.0);

    j["sellers"]["initial_budget"] = {10.0, 20.0};
    CHECK_THROWS_AS((void)arena_config_from_json(j), ConfigError);
}

TEST_CASE("per-seller algorithm lists map by position") {
    json j = minimal_config();
    j.erase("algorithm");
    j["sellers"] = {{"count", 2}};
    j["algorithms"] = {
        {{"kind", "constant"}, {"hyperparameters", {{"bid0", 0.1}}}},
        {{"kind", "linear"}, {"hyperparameters", {{"alpha", 2.0}}}},
    };
    const auto roster = arena_config_from_json(j).seller_configs();
    REQUIRE(roster.size() == 2);
    CHECK(roster[0].algorithm.kind == AlgorithmKind::Constant);
    CHECK(roster[1].algorithm.kind == AlgorithmKind::Linear);

    j["algorithms"].erase(1);
    CHECK_THROWS_AS((void)arena_config_from_json(j), ConfigError);
}

TEST_CASE("config rejects contradictory or missing blocks") {
    json both = minimal_config();
    both["dataset"] = "logs.csv";
    CHECK(error_of([&] { (void)arena_config_from_json(both); })
              .find("exactly one data source") != std::string::npos);

    json neither = minimal_config();
    neither.erase("synthetic");
    CHECK_THROWS_AS((void)arena_config_from_json(neither), ConfigError);

    json no_algo = minimal_config();
    no_algo.erase("algorithm");
    CHECK(error_of([&] { (void)arena_config_from_json(no_algo); }).find("missing 'algorithm'") !=
          std::string::npos);

    json both_algo = minimal_config();
    both_algo["algorithms"] = {{{"kind", "linear"}}};
    CHECK_THROWS_AS((void)arena_config_from_json(both_algo), ConfigError);

    json bad_sellers = minimal_config();
    bad_sellers["sellers"] = {{"count", 0}};
    CHECK_THROWS_AS((void)arena_config_from_json(bad_sellers), ConfigError);

    json bad_threads = minimal_config();
    bad_threads["threads"] = -1;
    CHECK_THROWS_AS((void)arena_config_from_json(bad_threads), ConfigError);
}

TEST_CASE("seller validation catches non-positive budgets and bounds") {
    json j = minimal_config();
    j["sellers"] = {{"count", 2}, {"initial_budget", 0.0}};
    const ArenaConfig cfg = arena_config_from_json(j);  // parse is fine
    CHECK_THROWS_AS((void)cfg.seller_configs(), ConfigError);

    json bad_cpc = minimal_config();
    bad_cpc["sellers"] = {{"count", 2}, {"cpc_bound", 0.0}};
    CHECK_THROWS_AS((void)arena_config_from_json(bad_cpc).seller_configs(), ConfigError);
}

TEST_CASE("synthetic seed defaults to the run seed but can be pinned") {
    json j = minimal_config();
    const ArenaConfig floating = arena_config_from_json(j);
    j["synthetic"]["seed"] = 99;
    const ArenaConfig pinned = arena_config_from_json(j);
    REQUIRE(pinned.synthetic_seed.has_value());
    CHECK(*pinned.synthetic_seed == 99);

    SyntheticConfig expected = *pinned.synthetic;
    expected.seed = 99;
    const auto pinned_rows = pinned.load_rows(7);
    const auto expected_rows = generate_synthetic(expected, 7);
    REQUIRE(pinned_rows.size() == expected_rows.size());
    CHECK(dataset_digest(pinned_rows) == dataset_digest(expected_rows));
    CHECK(pinned_rows.front().ctr == expected_rows.front().ctr);

    // unpinned: different run seed means different logs
    const auto a = floating.load_rows(1);
    const auto b = floating.load_rows(2);
    CHECK(dataset_digest(a) != dataset_digest(b));
    // pinned: same logs, only the derived ctr/cvr react to the run seed
    const auto c = pinned.load_rows(1);
    const auto d = pinned.load_rows(2);
    CHECK(dataset_digest(c) == dataset_digest(d));
    CHECK(c.front().ctr != d.front().ctr);
}

TEST_CASE("load_rows reads a dataset file when one is configured") {
    const std::string csv =
        "period,timestep,seller_id,auction_id,p_value,winning_price\n"
        "1,1,1,0,0.02,0.3\n"
        "2,1,1,0,0.04,0.25\n";
    TempFile data("tmp_cfg_rows.csv", csv);

    json j = minimal_config();
    j.erase("synthetic");
    j["dataset"] = data.path;
    j["sellers"] = {{"count", 1}};
    const ArenaConfig cfg = arena_config_from_json(j);
    const auto rows = cfg.load_rows(7);
    const auto direct = load_dataset(data.path, 7);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].p_value == direct[0].p_value);
    CHECK(rows[0].ctr == direct[0].ctr);
}

TEST_CASE("load_arena_config digests the raw bytes") {
    const std::string bytes = minimal_config().dump(2);
    TempFile file("tmp_arena_config.json", bytes);
    const LoadedConfig loaded = load_arena_config(file.path);
    CHECK(loaded.digest == fnv1a_hex(bytes));
    CHECK(loaded.config.n_sellers == 3);

    CHECK_THROWS_AS((void)load_arena_config("no_such_config.json"), ParseError);
    TempFile junk("tmp_arena_config_junk.json", "{not json");
    CHECK_THROWS_AS((void)load_arena_config(junk.path), ParseError);
    TempFile wrong_shape("tmp_arena_config_shape.json", "[1,2,3]");
    CHECK_THROWS_AS((void)load_arena_config(wrong_shape.path), ConfigError);
}

TEST_CASE("search spaces parse grids, ranges and budgets") {
    const SearchSpace space = search_space_from_json(json{
        {"kind", "grid"},
        {"budget", 10},
        {"params",
         {
             {"bid0", {{"grid", {0.1, 0.2}}}},
             {"alpha", {{"low", 1.0}, {"high", 100.0}, {"count", 3}, {"scale", "log"}}},
         }},
    });
    CHECK(space.kind == SearchSpace::Kind::Grid);
    CHECK(space.budget == 10);
    REQUIRE(space.params.size() == 2);
    CHECK((space.params.at("bid0").grid == std::vector<double>{0.1, 0.2}));
    CHECK(space.params.at("alpha").count == 3);
    CHECK(space.params.at("alpha").scale == ParamRange::Scale::Log);

    const SearchSpace defaults = search_space_from_json(json::object());
    CHECK(defaults.kind == SearchSpace::Kind::Grid);
    CHECK(defaults.budget == -1);
    CHECK(defaults.params.empty());

    const SearchSpace random = search_space_from_json(json{{"kind", "random"}, {"budget", 5}});
    CHECK(random.kind == SearchSpace::Kind::Random);
}

TEST_CASE("search space rejections") {
    CHECK_THROWS_AS((void)search_space_from_json(json::array()), ConfigError);
    CHECK_THROWS_AS((void)search_space_from_json(json{{"kind", "simulated_annealing"}}),
                    ConfigError);
    CHECK_THROWS_AS((void)search_space_from_json(json{{"params", 3}}), ConfigError);
    CHECK_THROWS_AS(
        (void)search_space_from_json(json{{"params", {{"x", {{"grid", "nope"}}}}}}),
        ConfigError);
    const std::string no_low = error_of([&] {
        (void)search_space_from_json(json{{"params", {{"x", {{"high", 2.0}}}}}});
    });
    CHECK(no_low.find("missing numeric 'low'") != std::string::npos);
    CHECK_THROWS_AS((void)search_space_from_json(json{
                        {"params", {{"x", {{"low", 1.0}, {"high", 2.0}, {"scale", "cubic"}}}}}}),
                    ConfigError);
    // validation runs at parse time: low >= high is caught here
    CHECK_THROWS_AS((void)search_space_from_json(
                        json{{"params", {{"x", {{"low", 2.0}, {"high", 1.0}, {"count", 3}}}}}}),
                    ConfigError);
}

TEST_CASE("search spaces load from files") {
    TempFile file("tmp_space.json",
                  R"({"kind":"grid","params":{"bid0":{"grid":[0.5]}}})");
    const SearchSpace space = load_search_space(file.path);
    CHECK(space.params.at("bid0").grid == std::vector<double>{0.5});

    CHECK_THROWS_AS((void)load_search_space("no_such_space.json"), ParseError);
    TempFile junk("tmp_space_junk.json", "not json at all");
    CHECK_THROWS_AS((void)load_search_space(junk.path), ParseError);
}
