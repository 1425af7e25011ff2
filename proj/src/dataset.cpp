#include "arena/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "arena/decompose.hpp"
#include "arena/rng.hpp"
#include "arena/text.hpp"

namespace arena {

namespace {

constexpr const char* kCsvHeader = "period,timestep,seller_id,auction_id,p_value,winning_price";

struct RowKey {
    int period;
    int seller_id;
    int timestep;
    std::int64_t auction_id;
};

bool canonical_less(const ImpressionOpportunity& a, const ImpressionOpportunity& b) {
    return std::tuple(a.period, a.seller_id, a.timestep, a.auction_id) <
           std::tuple(b.period, b.seller_id, b.timestep, b.auction_id);
}

[[noreturn]] void fail_row(const std::string& path, std::size_t line, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

// clamp into the open interval (lo, hi)
double clip_open(double x, double lo, double hi) {
    if (x <= lo) return std::nextafter(lo, hi);
    if (x >= hi) return std::nextafter(hi, lo);
    return x;
}

void sort_and_check_unique(std::vector<ImpressionOpportunity>& rows, const std::string& origin) {
    std::sort(rows.begin(), rows.end(), canonical_less);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& a = rows[i - 1];
        const auto& b = rows[i];
        if (a.period == b.period && a.seller_id == b.seller_id && a.timestep == b.timestep &&
            a.auction_id == b.auction_id) {
            throw ParseError(origin + ": duplicate auction (period=" + std::to_string(a.period) +
                             ", seller=" + std::to_string(a.seller_id) +
                             ", timestep=" + std::to_string(a.timestep) +
                             ", auction_id=" + std::to_string(a.auction_id) + ")");
        }
    }
}

}  // namespace

void SyntheticConfig::validate() const {
    if (n_sellers <= 0) throw ConfigError("synthetic: n_sellers must be positive");
    if (n_timesteps <= 0) throw ConfigError("synthetic: n_timesteps must be positive");
    if (auctions_per_seller_timestep <= 0) {
        throw ConfigError("synthetic: auctions_per_seller_timestep must be positive");
    }
    if (!(p_log_sigma > 0.0) || !std::isfinite(p_log_sigma)) {
        throw ConfigError("synthetic: p_log_sigma must be positive and finite");
    }
    if (!(wp_log_sigma > 0.0) || !std::isfinite(wp_log_sigma)) {
        throw ConfigError("synthetic: wp_log_sigma must be positive and finite");
    }
    if (!std::isfinite(p_log_mean) || !std::isfinite(wp_log_mean)) {
        throw ConfigError("synthetic: log means must be finite");
    }
}

std::vector<ImpressionOpportunity> load_dataset(const std::string& path, std::uint64_t run_seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");

    std::vector<ImpressionOpportunity> rows;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        fail_row(path, line_no, "bad header, expected '" + std::string(kCsvHeader) + "'");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::string_view rest = line;
        std::string_view field[6];
        for (int i = 0; i < 6; ++i) {
            const auto comma = rest.find(',');
            if (i < 5) {
                if (comma == std::string_view::npos) fail_row(path, line_no, "expected 6 fields");
                field[i] = rest.substr(0, comma);
                rest = rest.substr(comma + 1);
            } else {
                if (comma != std::string_view::npos) fail_row(path, line_no, "expected 6 fields");
                field[i] = rest;
            }
        }

        ImpressionOpportunity row;
        std::int64_t period = 0, timestep = 0, seller = 0;
        if (!parse_int64(field[0], period)) fail_row(path, line_no, "bad period");
        if (!parse_int64(field[1], timestep)) fail_row(path, line_no, "bad timestep");
        if (!parse_int64(field[2], seller)) fail_row(path, line_no, "bad seller_id");
        if (!parse_int64(field[3], row.auction_id)) fail_row(path, line_no, "bad auction_id");
        if (!parse_double(field[4], row.p_value)) fail_row(path, line_no, "bad p_value");
        if (!parse_double(field[5], row.winning_price)) fail_row(path, line_no, "bad winning_price");

        if (period != 1 && period != 2) fail_row(path, line_no, "period must be 1 or 2");
        if (timestep < 1) fail_row(path, line_no, "timestep must be >= 1");
        if (seller < 1) fail_row(path, line_no, "seller_id must be >= 1");
        if (!(row.p_value > 0.0) || !(row.p_value < 1.0)) {
            fail_row(path, line_no, "p_value must lie in (0, 1)");
        }
        if (!(row.winning_price >= 0.0) || !std::isfinite(row.winning_price)) {
            fail_row(path, line_no, "winning_price must be finite and >= 0");
        }
        row.period = static_cast<int>(period);
        row.timestep = static_cast<int>(timestep);
        row.seller_id = static_cast<int>(seller);
        rows.push_back(row);
    }

    sort_and_check_unique(rows, path);
    decompose_rows(rows, run_seed);
    return rows;
}

std::vector<ImpressionOpportunity> generate_synthetic(const SyntheticConfig& cfg,
                                                      std::uint64_t run_seed) {
    cfg.validate();
    std::vector<ImpressionOpportunity> rows;
    rows.reserve(static_cast<std::size_t>(cfg.n_sellers) * 2 * cfg.n_timesteps *
                 cfg.auctions_per_seller_timestep);

    for (int s = 1; s <= cfg.n_sellers; ++s) {
        RandomStream rng(cfg.seed, RngPurpose::Synthesis, static_cast<std::uint64_t>(s));
        for (int period = 1; period <= 2; ++period) {
            for (int t = 1; t <= cfg.n_timesteps; ++t) {
                for (int a = 1; a <= cfg.auctions_per_seller_timestep; ++a) {
                    ImpressionOpportunity row;
                    row.period = period;
                    row.timestep = t;
                    row.seller_id = s;
                    row.auction_id = a;
                    row.p_value =
                        clip_open(rng.lognormal(cfg.p_log_mean, cfg.p_log_sigma), kPValueLo, kPValueHi);
                    row.winning_price =
                        std::max(rng.lognormal(cfg.wp_log_mean, cfg.wp_log_sigma), kWinningPriceFloor);
                    rows.push_back(row);
                }
            }
        }
    }

    std::sort(rows.begin(), rows.end(), canonical_less);
    decompose_rows(rows, run_seed);
    return rows;
}

void decompose_rows(std::vector<ImpressionOpportunity>& rows, std::uint64_t run_seed) {
    std::sort(rows.begin(), rows.end(), canonical_less);
    // Rows are period-major, but each seller's rows still appear in its own
    // (period, timestep, auction) order, so one sequential pass consumes each
    // per-seller stream in a stable order.
    std::map<int, RandomStream> streams;
    for (auto& row : rows) {
        auto it = streams.find(row.seller_id);
        if (it == streams.end()) {
            it = streams
                     .emplace(row.seller_id,
                              RandomStream(run_seed, RngPurpose::Decompose,
                                           static_cast<std::uint64_t>(row.seller_id)))
                     .first;
        }
        const CtrCvr split = sample_decomposition(row.p_value, it->second);
        row.ctr = split.ctr;
        row.cvr = split.cvr;
    }
}

void write_dataset_csv(const std::string& path, std::span<const ImpressionOpportunity> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    out << kCsvHeader << '\n';
    for (const auto& row : rows) {
        out << row.period << ',' << row.timestep << ',' << row.seller_id << ',' << row.auction_id
            << ',' << format_double(row.p_value) << ',' << format_double(row.winning_price)
            << '\n';
    }
    if (!out) throw ParseError(path + ": write failed");
}

namespace {

void fnv1a_append(std::uint64_t& h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
}

std::string fnv1a_to_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    fnv1a_append(h, bytes);
    return fnv1a_to_hex(h);
}

std::string dataset_digest(std::span<const ImpressionOpportunity> rows) {
    std::uint64_t h = 14695981039346656037ull;
    for (const auto& row : rows) {
        std::string line = format_int(row.period) + ',' + format_int(row.timestep) + ',' +
                           format_int(row.seller_id) + ',' + format_int(row.auction_id) + ',' +
                           format_double(row.p_value) + ',' + format_double(row.winning_price) +
                           '\n';
        fnv1a_append(h, line);
    }
    return fnv1a_to_hex(h);
}

std::unordered_map<int, BidBounds> extract_bid_bounds(std::span<const ImpressionOpportunity> rows,
                                                      int period) {
    std::unordered_map<int, BidBounds> bounds;
    for (const auto& row : rows) {
        if (row.period != period) continue;
        auto& b = bounds[row.seller_id];
        if (!b.has_history) {
            b.lo = row.winning_price;
            b.hi = row.winning_price;
            b.has_history = true;
        } else {
            b.lo = std::min(b.lo, row.winning_price);
            b.hi = std::max(b.hi, row.winning_price);
        }
    }
    return bounds;
}

}  // namespace arena
