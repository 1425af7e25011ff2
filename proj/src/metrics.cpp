#include "arena/metrics.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "arena/algorithms.hpp"
#include "arena/text.hpp"

namespace arena {

namespace {

// per-seller views over the seller-major row block
struct SellerRows {
    const TimestepRecord* begin = nullptr;
    std::size_t count = 0;
};

std::vector<SellerRows> split_rows(const EpisodeTrace& trace) {
    const std::size_t n_sellers = trace.seller_ids.size();
    const auto T = static_cast<std::size_t>(trace.total_timesteps);
    if (trace.rows.size() != n_sellers * T) {
        throw TraceError("trace holds " + std::to_string(trace.rows.size()) + " rows, expected " +
                         std::to_string(n_sellers * T));
    }
    std::vector<SellerRows> out(n_sellers);
    for (std::size_t i = 0; i < n_sellers; ++i) {
        out[i] = {trace.rows.data() + i * T, T};
        for (std::size_t t = 0; t < T; ++t) {
            const auto& row = out[i].begin[t];
            if (row.seller_id != trace.seller_ids[i] || row.timestep != static_cast<int>(t) + 1) {
                throw TraceError("trace rows are not in canonical seller-major order");
            }
        }
    }
    return out;
}

double seller_rmse(const SellerRows& rows, double b0, int total_timesteps) {
    if (total_timesteps == 0) return 0.0;
    double sum_sq = 0.0;
    for (std::size_t t = 0; t < rows.count; ++t) {
        // same uniform-pacing target line the controllers steer towards
        const double dev = target_balance(b0, total_timesteps, static_cast<int>(t) + 1) -
                           rows.begin[t].balance;
        sum_sq += dev * dev;
    }
    return std::sqrt(sum_sq / static_cast<double>(total_timesteps));
}

}  // namespace

MetricsReport compute_metrics(const EpisodeTrace& trace) {
    const auto sellers = split_rows(trace);

    MetricsReport report;
    report.per_seller.reserve(sellers.size());

    std::int64_t auctions = 0;
    std::int64_t wins = 0;
    double cost = 0.0;

    for (std::size_t i = 0; i < sellers.size(); ++i) {
        MetricsReport::SellerBreakdown breakdown;
        breakdown.seller_id = trace.seller_ids[i];
        for (std::size_t t = 0; t < sellers[i].count; ++t) {
            const auto& row = sellers[i].begin[t];
            breakdown.auctions += row.auctions;
            breakdown.wins += row.wins;
            breakdown.cost += row.cost;
            breakdown.clicks += row.clicks;
            breakdown.conversions += row.conversions;
        }
        breakdown.rmse =
            seller_rmse(sellers[i], trace.initial_budgets[i], trace.total_timesteps);

        auctions += breakdown.auctions;
        wins += breakdown.wins;
        cost += breakdown.cost;
        report.clicks += breakdown.clicks;
        report.conversions += breakdown.conversions;
        report.rmse += breakdown.rmse;
        report.per_seller.push_back(breakdown);
    }

    if (auctions > 0) report.awr = static_cast<double>(wins) / static_cast<double>(auctions);
    if (wins > 0) report.ecpm = cost / static_cast<double>(wins) * 1000.0;
    if (report.clicks > 0) report.ecpc = cost / static_cast<double>(report.clicks);
    if (report.conversions > 0) report.ecpa = cost / static_cast<double>(report.conversions);
    return report;
}

double rmse_pacing(const EpisodeTrace& trace) {
    const auto sellers = split_rows(trace);
    double total = 0.0;
    for (std::size_t i = 0; i < sellers.size(); ++i) {
        total += seller_rmse(sellers[i], trace.initial_budgets[i], trace.total_timesteps);
    }
    return total;
}

namespace {

nlohmann::json optional_to_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json metrics_report_to_json(const MetricsReport& report) {
    nlohmann::json per_seller = nlohmann::json::array();
    for (const auto& s : report.per_seller) {
        per_seller.push_back({
            {"seller_id", s.seller_id},
            {"auctions", s.auctions},
            {"wins", s.wins},
            {"cost", s.cost},
            {"clicks", s.clicks},
            {"conversions", s.conversions},
            {"rmse", s.rmse},
        });
    }
    return {
        {"awr", optional_to_json(report.awr)},
        {"ecpm", optional_to_json(report.ecpm)},
        {"clicks", report.clicks},
        {"ecpc", optional_to_json(report.ecpc)},
        {"cnv", report.conversions},
        {"ecpa", optional_to_json(report.ecpa)},
        {"rmse", report.rmse},
        {"per_seller", per_seller},
    };
}

std::string metrics_to_json(const MetricsReport& report, int indent) {
    return metrics_report_to_json(report).dump(indent);
}

void write_metrics_csv(const std::string& path, const MetricsReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TraceError(path + ": cannot open file for writing");
    const auto cell = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string("null");
    };
    out << "metric,value\n";
    out << "awr," << cell(report.awr) << '\n';
    out << "ecpm," << cell(report.ecpm) << '\n';
    out << "clicks," << report.clicks << '\n';
    out << "ecpc," << cell(report.ecpc) << '\n';
    out << "cnv," << report.conversions << '\n';
    out << "ecpa," << cell(report.ecpa) << '\n';
    out << "rmse," << format_double(report.rmse) << '\n';
    if (!out) throw TraceError(path + ": write failed");
}

}  // namespace arena
