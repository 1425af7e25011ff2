#include "arena/env.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "arena/text.hpp"

namespace arena {

void SellerConfig::validate() const {
    if (seller_id < 1) throw ConfigError("seller_id must be >= 1");
    if (!(initial_budget > 0.0) || !std::isfinite(initial_budget)) {
        throw ConfigError("seller " + std::to_string(seller_id) +
                          ": initial_budget must be positive and finite");
    }
    if (!(cpc_bound > 0.0) || !(cpa_bound > 0.0)) {
        throw ConfigError("seller " + std::to_string(seller_id) + ": cost bounds must be positive");
    }
}

AuctionOutcome run_auction(double bid, const ImpressionOpportunity& opp, double remaining_budget,
                           RandomStream& rng) {
    if (std::isnan(bid)) bid = 0.0;
    const double effective = std::clamp(bid, 0.0, remaining_budget);
    AuctionOutcome out;
    if (effective > opp.winning_price) {
        out.won = true;
        out.cost = opp.winning_price;
        out.clicked = rng.bernoulli(opp.ctr);
        if (out.clicked) out.converted = rng.bernoulli(opp.cvr);
    }
    return out;
}

namespace {

std::uint64_t stream_key(int period, int seller_id) {
    return (static_cast<std::uint64_t>(period) << 32) | static_cast<std::uint64_t>(seller_id);
}

}  // namespace

namespace {

SellerContext seller_context(const SellerConfig& config, const BidBounds& bounds,
                             const EpisodeParams& params) {
    SellerContext ctx;
    ctx.seller_id = config.seller_id;
    ctx.initial_budget = config.initial_budget;
    ctx.cpc_bound = config.cpc_bound;
    ctx.cpa_bound = config.cpa_bound;
    ctx.total_timesteps = params.total_timesteps;
    ctx.bid_min = bounds.has_history ? bounds.lo : 0.0;
    ctx.bid_max = bounds.has_history ? bounds.hi : 0.0;
    ctx.master_seed = derive_seed(params.seed, RngPurpose::Algorithm,
                                  stream_key(params.period, 0));
    return ctx;
}

}  // namespace

SellerRun::SellerRun(const SellerConfig& config, const BidBounds& bounds,
                     const EpisodeParams& params)
    : SellerRun(config, make_bidder(config.algorithm, seller_context(config, bounds, params)),
                params) {}

SellerRun::SellerRun(const SellerConfig& config, std::unique_ptr<Bidder> bidder,
                     const EpisodeParams& params)
    : config_(config),
      bidder_(std::move(bidder)),
      total_timesteps_(params.total_timesteps),
      remaining_(config.initial_budget),
      outcome_rng_(params.seed, RngPurpose::Outcome, stream_key(params.period, config.seller_id)) {
    config_.validate();
    if (!bidder_) throw ConfigError("seller requires a bidder instance");
    balance_history_.reserve(static_cast<std::size_t>(std::max(params.total_timesteps, 0)));
}

TimestepRecord SellerRun::process_timestep(std::span<const ImpressionOpportunity> rows, int t) {
    quotes_.clear();
    quotes_.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.seller_id != config_.seller_id || row.timestep != t) {
            throw TraceError("timestep slice routed to the wrong seller");
        }
        if (!quotes_.empty() && quotes_.back().auction_id >= row.auction_id) {
            throw TraceError("auctions must arrive in ascending auction_id order");
        }
        quotes_.push_back({row.auction_id, row.ctr, row.cvr});
    }

    TimestepRequest req;
    req.timestep = t;
    req.total_timesteps = total_timesteps_;
    req.budget_left = remaining_;
    req.cpc_bound = config_.cpc_bound;
    req.cpa_bound = config_.cpa_bound;
    req.auctions = &quotes_;

    bids_.clear();
    bidder_->bids(req, bids_);
    if (bids_.size() != quotes_.size()) {
        throw TraceError("bidder returned " + std::to_string(bids_.size()) + " bids for " +
                         std::to_string(quotes_.size()) + " auctions");
    }

    const double balance_before = remaining_;
    TimestepRecord record;
    record.seller_id = config_.seller_id;
    record.timestep = t;
    record.auctions = static_cast<std::int64_t>(rows.size());

    for (std::size_t i = 0; i < rows.size(); ++i) {
        double bid = bids_[i];
        if (std::isnan(bid)) {
            ++nan_bid_warnings_;
            bid = 0.0;
        }
        const AuctionOutcome outcome = run_auction(bid, rows[i], remaining_, outcome_rng_);
        if (outcome.won) {
            remaining_ -= outcome.cost;
            if (remaining_ < 0.0) throw TraceError("negative balance after win");
            ++record.wins;
            record.clicks += outcome.clicked ? 1 : 0;
            record.conversions += outcome.converted ? 1 : 0;
        }
    }

    record.cost = balance_before - remaining_;
    record.balance = remaining_;
    balance_history_.push_back(remaining_);

    TimestepOutcomeSummary summary;
    summary.timestep = t;
    summary.auctions = record.auctions;
    summary.wins = record.wins;
    summary.cost = record.cost;
    summary.clicks = record.clicks;
    summary.conversions = record.conversions;
    summary.balance = remaining_;
    bidder_->observe(summary);

    return record;
}

std::vector<TimestepRecord> run_timestep(std::vector<SellerRun>& sellers,
                                         std::span<const ImpressionOpportunity> slice, int t) {
    std::unordered_map<int, std::size_t> roster;
    roster.reserve(sellers.size());
    for (std::size_t i = 0; i < sellers.size(); ++i) {
        roster.emplace(sellers[i].seller_id(), i);
    }

    // canonical order makes each seller's rows a contiguous run in the slice
    std::vector<std::pair<std::size_t, std::size_t>> ranges(sellers.size(), {0, 0});
    std::size_t pos = 0;
    while (pos < slice.size()) {
        const int sid = slice[pos].seller_id;
        std::size_t end = pos;
        while (end < slice.size() && slice[end].seller_id == sid) ++end;
        const auto it = roster.find(sid);
        if (it == roster.end()) {
            throw ConfigError("data references unknown seller_id " + std::to_string(sid));
        }
        ranges[it->second] = {pos, end - pos};
        pos = end;
    }

    std::vector<TimestepRecord> records;
    records.reserve(sellers.size());
    for (std::size_t i = 0; i < sellers.size(); ++i) {
        records.push_back(
            sellers[i].process_timestep(slice.subspan(ranges[i].first, ranges[i].second), t));
    }
    return records;
}

namespace {

struct SellerSlices {
    // (offset, count) into the period data per timestep, index t-1
    std::vector<std::pair<std::size_t, std::size_t>> per_t;
};

}  // namespace

EpisodeTrace run_episode(const std::vector<SellerConfig>& configs,
                         std::span<const ImpressionOpportunity> data, const EpisodeParams& params,
                         const std::unordered_map<int, BidBounds>& bid_bounds) {
    if (configs.empty()) throw ConfigError("seller roster is empty");
    if (params.total_timesteps < 0) throw ConfigError("total_timesteps must be >= 0");

    std::unordered_map<int, std::size_t> roster;
    roster.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        configs[i].validate();
        if (!roster.emplace(configs[i].seller_id, i).second) {
            throw ConfigError("duplicate seller_id " + std::to_string(configs[i].seller_id));
        }
    }

    const int T = params.total_timesteps;
    std::vector<SellerSlices> slices(configs.size());
    for (auto& s : slices) s.per_t.assign(static_cast<std::size_t>(T), {0, 0});

    for (std::size_t pos = 0; pos < data.size();) {
        const auto& row = data[pos];
        if (row.period != params.period) {
            throw ConfigError("data row for period " + std::to_string(row.period) +
                              " in a period-" + std::to_string(params.period) + " episode");
        }
        const auto it = roster.find(row.seller_id);
        if (it == roster.end()) {
            throw ConfigError("data references unknown seller_id " + std::to_string(row.seller_id));
        }
        if (row.timestep < 1 || row.timestep > T) {
            throw ConfigError("data timestep " + std::to_string(row.timestep) +
                              " outside 1.." + std::to_string(T));
        }
        std::size_t end = pos;
        while (end < data.size() && data[end].seller_id == row.seller_id &&
               data[end].timestep == row.timestep && data[end].period == row.period) {
            ++end;
        }
        slices[it->second].per_t[static_cast<std::size_t>(row.timestep - 1)] = {pos, end - pos};
        pos = end;
    }

    EpisodeTrace trace;
    trace.period = params.period;
    trace.seed = params.seed;
    trace.total_timesteps = T;
    trace.config_digest = params.config_digest;
    trace.dataset_digest = params.dataset_digest;
    trace.seller_ids.reserve(configs.size());
    trace.initial_budgets.reserve(configs.size());
    for (const auto& cfg : configs) {
        trace.seller_ids.push_back(cfg.seller_id);
        trace.initial_budgets.push_back(cfg.initial_budget);
    }
    trace.rows.assign(configs.size() * static_cast<std::size_t>(T), TimestepRecord{});

    std::vector<std::uint64_t> nan_warnings(configs.size(), 0);
    std::vector<std::uint64_t> incidents(configs.size(), 0);

    auto run_seller = [&](std::size_t i) {
        static const BidBounds no_history;
        const auto bounds_it = bid_bounds.find(configs[i].seller_id);
        SellerRun seller(configs[i], bounds_it != bid_bounds.end() ? bounds_it->second : no_history,
                         params);
        for (int t = 1; t <= T; ++t) {
            const auto [offset, count] = slices[i].per_t[static_cast<std::size_t>(t - 1)];
            trace.rows[i * static_cast<std::size_t>(T) + static_cast<std::size_t>(t - 1)] =
                seller.process_timestep(data.subspan(offset, count), t);
        }
        nan_warnings[i] = seller.nan_bid_warnings();
        incidents[i] = seller.protocol_incidents();
    };

    int threads = params.threads;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(configs.size())));

    if (threads == 1) {
        for (std::size_t i = 0; i < configs.size(); ++i) run_seller(i);
    } else {
        std::vector<std::exception_ptr> errors(configs.size());
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = static_cast<std::size_t>(w); i < configs.size();
                     i += static_cast<std::size_t>(threads)) {
                    try {
                        run_seller(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        for (const auto& err : errors) {
            if (err) std::rethrow_exception(err);
        }
    }

    for (std::size_t i = 0; i < configs.size(); ++i) {
        trace.nan_bid_warnings += nan_warnings[i];
        trace.protocol_incidents += incidents[i];
    }
    return trace;
}

void write_trace_csv(const std::string& path, const EpisodeTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TraceError(path + ": cannot open file for writing");
    out << "seller_id,timestep,wins,cost,clicks,conversions,balance\n";
    for (const auto& row : trace.rows) {
        out << row.seller_id << ',' << row.timestep << ',' << row.wins << ','
            << format_double(row.cost) << ',' << row.clicks << ',' << row.conversions << ','
            << format_double(row.balance) << '\n';
    }
    if (!out) throw TraceError(path + ": write failed");
}

void write_episode_header_json(const std::string& path, const EpisodeTrace& trace) {
    nlohmann::json header = {
        {"period", trace.period},
        {"seed", trace.seed},
        {"total_timesteps", trace.total_timesteps},
        {"sellers", trace.seller_ids.size()},
        {"config_digest", trace.config_digest},
        {"dataset_digest", trace.dataset_digest},
        {"nan_bid_warnings", trace.nan_bid_warnings},
        {"protocol_incidents", trace.protocol_incidents},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TraceError(path + ": cannot open file for writing");
    out << header.dump(2) << '\n';
    if (!out) throw TraceError(path + ": write failed");
}

}  // namespace arena
