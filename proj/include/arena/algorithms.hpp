#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arena/types.hpp"

namespace arena {

enum class AlgorithmKind {
    Constant,
    Random,
    Linear,
    CostMax,
    Ortb1,
    Ortb2,
    Opt,
    Broi,
    Cb,
    Fb,
    FbWl,
    Mystique,
    Pid,
    Mpid,
    External,
};

const char* to_string(AlgorithmKind kind);
AlgorithmKind algorithm_kind_from_string(const std::string& name);

// How to reach an out-of-process bidder: either a child process speaking the
// line protocol over stdio, or an already-listening TCP endpoint.
struct ExternalEndpoint {
    std::vector<std::string> command;  // argv; empty when using TCP
    std::string tcp_host;
    int tcp_port = 0;
    int timeout_ms = 1000;

    bool is_tcp() const { return !tcp_host.empty(); }
};

struct AlgorithmSpec {
    AlgorithmKind kind = AlgorithmKind::Linear;
    // Ordered so candidate enumeration and tie-breaking are deterministic.
    std::map<std::string, double> hyperparameters;
    TargetMetric target_metric = TargetMetric::Clicks;
    std::optional<ExternalEndpoint> external;

    double param(const std::string& name) const;
    double param_or(const std::string& name, double fallback) const;
};

// ---------------------------------------------------------------------------
// Bid formulas. All are pure; `target` selects the objective factor.
// ---------------------------------------------------------------------------

// cvr when optimizing conversions, 1 otherwise
double obj_factor(double ctr, double cvr, TargetMetric target);

double bid_linear(double ctr, double cvr, double alpha, TargetMetric target);

// scales the per-event price bound (CPC or CPA, matching the target)
double bid_costmax(double b, TargetMetric target, double cpc_bound, double cpa_bound);

// sqrt(c / lambda * ctr * obj + c^2) - c
double bid_ortb1(double ctr, double cvr, double c, double lambda, TargetMetric target);

// c * (d^(1/3) - (c / (lambda * d))^(1/3))  with
// d = ctr*obj/lambda + sqrt((ctr*obj/lambda)^2 + c^2/lambda^2), floored at 0
double bid_ortb2(double ctr, double cvr, double c, double lambda, TargetMetric target);

// dual-variable form: ctr*obj/(p+q) + q*ctr*cpc_bound/(p+q)
double bid_opt(double ctr, double cvr, double p, double q, TargetMetric target, double cpc_bound);

// value shaded by the budget dual: ctr*obj/(1+mu)
double bid_broi(double ctr, double cvr, double mu, TargetMetric target);

// budget-smoothed shading of the full value: a_scale*ctr*cvr/(1+lambda)
double bid_cb(double ctr, double cvr, double a_scale, double lambda);

// Projected subgradient step on a spend dual. Shared by the BROI and CB
// updates: dual <- max(0, dual + eta*(spend - ref)/ref) with ref = B0/T.
double dual_pacing_step(double dual, double eta, double spend, double per_step_budget);

// ---------------------------------------------------------------------------
// Controller pieces (budget pacing feedback).
// ---------------------------------------------------------------------------

// Multiplier update m <- m * exp(phi) with phi clamped into [-5, 5] per
// application, keeping a single step bounded while integrator state itself
// stays unclamped.
inline constexpr double kActuatorClampLo = -5.0;
inline constexpr double kActuatorClampHi = 5.0;

double exp_actuator(double multiplier, double phi);

// e   = target balance minus observed balance after step t
// e_g = observed balance delta minus target balance delta:
//       (balance(t) - balance(t-1)) - (target(t) - target(t-1))
struct PacingErrors {
    double e = 0.0;
    double e_g = 0.0;
};

// target balance under uniform pacing: b0 * (T - t) / T
double target_balance(double b0, int total_timesteps, int t);

PacingErrors budget_pacing_errors(double b0, int total_timesteps, int t, double balance,
                                  double prev_balance);

// one-shot signal rebuilt each step from the running error integral
double fb_adjust(double lambda1, double lambda2, double lambda3, double e, double integral,
                 double e_g);

// accumulating variant: phi <- phi + lambda4 * e
double fbwl_adjust(double phi_prev, double lambda4, double e);

// accumulating two-term variant: phi <- phi + w_s * e + w_g * e_g
double mystique_adjust(double phi_prev, double w_s, double e, double w_g, double e_g);

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
};

// kp*e + ki*integral + kd*e_g
double pid_signal(const PidGains& g, double e, double integral, double e_g);

struct MpidMix {
    double phi_p = 0.0;
    double phi_q = 0.0;
};

// Cross-couples the two control signals:
//   phi_p' = gamma_p * phi_p + (1 - gamma_p) * phi_q
//   phi_q' = (1 - gamma_q) * phi_p + gamma_q * phi_q
// gamma_p = gamma_q = 1 leaves both signals untouched.
MpidMix mpid_mix(double gamma_p, double gamma_q, double phi_p, double phi_q);

// ---------------------------------------------------------------------------
// Episode-facing bidder interface.
// ---------------------------------------------------------------------------

struct AuctionQuote {
    std::int64_t auction_id = 0;
    double ctr = 0.0;
    double cvr = 0.0;
};

struct TimestepRequest {
    int timestep = 1;
    int total_timesteps = 1;
    double budget_left = 0.0;
    double cpc_bound = 0.0;
    double cpa_bound = 0.0;
    const std::vector<AuctionQuote>* auctions = nullptr;
};

struct TimestepOutcomeSummary {
    int timestep = 1;
    std::int64_t auctions = 0;
    std::int64_t wins = 0;
    double cost = 0.0;
    std::int64_t clicks = 0;
    std::int64_t conversions = 0;
    double balance = 0.0;
};

class Bidder {
public:
    virtual ~Bidder() = default;

    // One bid per quote, same order. Called once per timestep.
    virtual void bids(const TimestepRequest& req, std::vector<double>& out) = 0;

    // Aggregate feedback for the step just simulated. Called after every
    // timestep, including steps with zero auctions.
    virtual void observe(const TimestepOutcomeSummary& summary) { (void)summary; }

    // Wire-protocol failures (timeouts, malformed replies). Zero for
    // in-process bidders.
    virtual std::uint64_t protocol_incidents() const { return 0; }
};

// Everything a bidder may condition on at construction time.
struct SellerContext {
    int seller_id = 1;
    double initial_budget = 0.0;
    double cpc_bound = 0.0;
    double cpa_bound = 0.0;
    int total_timesteps = 1;
    // period-1 winning-price segment for the random baseline
    double bid_min = 0.0;
    double bid_max = 0.0;
    std::uint64_t master_seed = 0;
};

// Validates the spec's hyperparameters (ConfigError on bad values) and
// builds the per-seller bidder instance.
std::unique_ptr<Bidder> make_bidder(const AlgorithmSpec& spec, const SellerContext& ctx);

}  // namespace arena
