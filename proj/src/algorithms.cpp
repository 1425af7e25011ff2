#include "arena/algorithms.hpp"

#include <algorithm>
#include <cmath>

#include "arena/external.hpp"
#include "arena/rng.hpp"

namespace arena {

const char* to_string(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::Constant: return "constant";
        case AlgorithmKind::Random: return "random";
        case AlgorithmKind::Linear: return "linear";
        case AlgorithmKind::CostMax: return "costmax";
        case AlgorithmKind::Ortb1: return "ortb1";
        case AlgorithmKind::Ortb2: return "ortb2";
        case AlgorithmKind::Opt: return "opt";
        case AlgorithmKind::Broi: return "broi";
        case AlgorithmKind::Cb: return "cb";
        case AlgorithmKind::Fb: return "fb";
        case AlgorithmKind::FbWl: return "fbwl";
        case AlgorithmKind::Mystique: return "mystique";
        case AlgorithmKind::Pid: return "pid";
        case AlgorithmKind::Mpid: return "mpid";
        case AlgorithmKind::External: return "external";
    }
    return "linear";
}

AlgorithmKind algorithm_kind_from_string(const std::string& name) {
    static const std::map<std::string, AlgorithmKind> table = {
        {"constant", AlgorithmKind::Constant}, {"random", AlgorithmKind::Random},
        {"linear", AlgorithmKind::Linear},     {"costmax", AlgorithmKind::CostMax},
        {"ortb1", AlgorithmKind::Ortb1},       {"ortb2", AlgorithmKind::Ortb2},
        {"opt", AlgorithmKind::Opt},           {"broi", AlgorithmKind::Broi},
        {"cb", AlgorithmKind::Cb},             {"fb", AlgorithmKind::Fb},
        {"fbwl", AlgorithmKind::FbWl},         {"mystique", AlgorithmKind::Mystique},
        {"pid", AlgorithmKind::Pid},           {"mpid", AlgorithmKind::Mpid},
        {"external", AlgorithmKind::External},
    };
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown algorithm '" + name + "'");
    return it->second;
}

double AlgorithmSpec::param(const std::string& name) const {
    auto it = hyperparameters.find(name);
    if (it == hyperparameters.end()) {
        throw ConfigError(std::string(to_string(kind)) + ": missing hyperparameter '" + name + "'");
    }
    return it->second;
}

double AlgorithmSpec::param_or(const std::string& name, double fallback) const {
    auto it = hyperparameters.find(name);
    return it == hyperparameters.end() ? fallback : it->second;
}

// ---------------------------------------------------------------------------
// Bid formulas
// ---------------------------------------------------------------------------

double obj_factor(double ctr, double cvr, TargetMetric target) {
    (void)ctr;
    return target == TargetMetric::Cnv ? cvr : 1.0;
}

double bid_linear(double ctr, double cvr, double alpha, TargetMetric target) {
    return alpha * ctr * obj_factor(ctr, cvr, target);
}

double bid_costmax(double b, TargetMetric target, double cpc_bound, double cpa_bound) {
    return b * (target == TargetMetric::Cnv ? cpa_bound : cpc_bound);
}

double bid_ortb1(double ctr, double cvr, double c, double lambda, TargetMetric target) {
    const double value = ctr * obj_factor(ctr, cvr, target);
    return std::sqrt(c / lambda * value + c * c) - c;
}

double bid_ortb2(double ctr, double cvr, double c, double lambda, TargetMetric target) {
    const double v = ctr * obj_factor(ctr, cvr, target) / lambda;
    const double d = v + std::sqrt(v * v + (c * c) / (lambda * lambda));
    const double bid = c * (std::cbrt(d) - std::cbrt(c / (lambda * d)));
    return std::max(bid, 0.0);
}

double bid_opt(double ctr, double cvr, double p, double q, TargetMetric target, double cpc_bound) {
    const double denom = p + q;
    return ctr * obj_factor(ctr, cvr, target) / denom + q * ctr * cpc_bound / denom;
}

double bid_broi(double ctr, double cvr, double mu, TargetMetric target) {
    return ctr * obj_factor(ctr, cvr, target) / (1.0 + mu);
}

double bid_cb(double ctr, double cvr, double a_scale, double lambda) {
    return a_scale * ctr * cvr / (1.0 + lambda);
}

double dual_pacing_step(double dual, double eta, double spend, double per_step_budget) {
    return std::max(0.0, dual + eta * (spend - per_step_budget) / per_step_budget);
}

// ---------------------------------------------------------------------------
// Controller pieces
// ---------------------------------------------------------------------------

double exp_actuator(double multiplier, double phi) {
    return multiplier * std::exp(std::clamp(phi, kActuatorClampLo, kActuatorClampHi));
}

double target_balance(double b0, int total_timesteps, int t) {
    return b0 * static_cast<double>(total_timesteps - t) / static_cast<double>(total_timesteps);
}

PacingErrors budget_pacing_errors(double b0, int total_timesteps, int t, double balance,
                                  double prev_balance) {
    const double target = target_balance(b0, total_timesteps, t);
    const double prev_target = target_balance(b0, total_timesteps, t - 1);
    PacingErrors out;
    out.e = target - balance;
    out.e_g = (balance - prev_balance) - (target - prev_target);
    return out;
}

double fb_adjust(double lambda1, double lambda2, double lambda3, double e, double integral,
                 double e_g) {
    return lambda1 * e + lambda2 * integral + lambda3 * e_g;
}

double fbwl_adjust(double phi_prev, double lambda4, double e) {
    return phi_prev + lambda4 * e;
}

double mystique_adjust(double phi_prev, double w_s, double e, double w_g, double e_g) {
    return phi_prev + w_s * e + w_g * e_g;
}

double pid_signal(const PidGains& g, double e, double integral, double e_g) {
    return g.kp * e + g.ki * integral + g.kd * e_g;
}

MpidMix mpid_mix(double gamma_p, double gamma_q, double phi_p, double phi_q) {
    MpidMix out;
    out.phi_p = gamma_p * phi_p + (1.0 - gamma_p) * phi_q;
    out.phi_q = (1.0 - gamma_q) * phi_p + gamma_q * phi_q;
    return out;
}

// ---------------------------------------------------------------------------
// Bidders
// ---------------------------------------------------------------------------

namespace {

void require(bool ok, const AlgorithmSpec& spec, const char* what) {
    if (!ok) throw ConfigError(std::string(to_string(spec.kind)) + ": " + what);
}

void require_finite_params(const AlgorithmSpec& spec) {
    for (const auto& [name, value] : spec.hyperparameters) {
        if (!std::isfinite(value)) {
            throw ConfigError(std::string(to_string(spec.kind)) + ": hyperparameter '" + name +
                              "' must be finite");
        }
    }
}

class ConstantBidder : public Bidder {
public:
    explicit ConstantBidder(double bid0) : bid0_(bid0) {}
    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        out.assign(req.auctions->size(), bid0_);
    }

private:
    double bid0_;
};

class RandomBidder : public Bidder {
public:
    RandomBidder(double lo, double hi, const SellerContext& ctx)
        : lo_(lo),
          hi_(hi),
          rng_(ctx.master_seed, RngPurpose::Algorithm, static_cast<std::uint64_t>(ctx.seller_id)) {}

    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        out.resize(req.auctions->size());
        for (auto& bid : out) bid = rng_.uniform(lo_, hi_);
    }

private:
    double lo_;
    double hi_;
    RandomStream rng_;
};

class LinearBidder : public Bidder {
public:
    LinearBidder(double alpha, TargetMetric target) : alpha_(alpha), target_(target) {}
    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        const auto& quotes = *req.auctions;
        out.resize(quotes.size());
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            out[i] = bid_linear(quotes[i].ctr, quotes[i].cvr, alpha_, target_);
        }
    }

private:
    double alpha_;
    TargetMetric target_;
};

class CostMaxBidder : public Bidder {
public:
    CostMaxBidder(double b, TargetMetric target) : b_(b), target_(target) {}
    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        out.assign(req.auctions->size(), bid_costmax(b_, target_, req.cpc_bound, req.cpa_bound));
    }

private:
    double b_;
    TargetMetric target_;
};

class OrtbBidder : public Bidder {
public:
    OrtbBidder(bool second_form, double c, double lambda, TargetMetric target)
        : second_form_(second_form), c_(c), lambda_(lambda), target_(target) {}

    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        const auto& quotes = *req.auctions;
        out.resize(quotes.size());
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            out[i] = second_form_ ? bid_ortb2(quotes[i].ctr, quotes[i].cvr, c_, lambda_, target_)
                                  : bid_ortb1(quotes[i].ctr, quotes[i].cvr, c_, lambda_, target_);
        }
    }

private:
    bool second_form_;
    double c_;
    double lambda_;
    TargetMetric target_;
};

class OptBidder : public Bidder {
public:
    OptBidder(double p, double q, TargetMetric target) : p_(p), q_(q), target_(target) {}
    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        const auto& quotes = *req.auctions;
        out.resize(quotes.size());
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            out[i] = bid_opt(quotes[i].ctr, quotes[i].cvr, p_, q_, target_, req.cpc_bound);
        }
    }

private:
    double p_;
    double q_;
    TargetMetric target_;
};

// Value bid shaded by a spend dual; BROI uses ctr*obj, CB the full ctr*cvr
// product through a free scale.
class DualPacingBidder : public Bidder {
public:
    DualPacingBidder(AlgorithmKind kind, double dual0, double eta, double a_scale,
                     const SellerContext& ctx, TargetMetric target)
        : kind_(kind),
          dual_(dual0),
          eta_(eta),
          a_scale_(a_scale),
          per_step_(ctx.initial_budget / ctx.total_timesteps),
          target_(target) {}

    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        const auto& quotes = *req.auctions;
        out.resize(quotes.size());
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            out[i] = kind_ == AlgorithmKind::Broi
                         ? bid_broi(quotes[i].ctr, quotes[i].cvr, dual_, target_)
                         : bid_cb(quotes[i].ctr, quotes[i].cvr, a_scale_, dual_);
        }
    }

    void observe(const TimestepOutcomeSummary& summary) override {
        dual_ = dual_pacing_step(dual_, eta_, summary.cost, per_step_);
    }

private:
    AlgorithmKind kind_;
    double dual_;
    double eta_;
    double a_scale_;
    double per_step_;
    TargetMetric target_;
};

// Common scaffolding for the multiplicative budget-pacing controllers: keeps
// the error bookkeeping in one place, derived classes turn errors into the
// adjustment phi.
class PacingControllerBidder : public Bidder {
public:
    PacingControllerBidder(const SellerContext& ctx, TargetMetric target)
        : b0_(ctx.initial_budget),
          total_timesteps_(ctx.total_timesteps),
          prev_balance_(ctx.initial_budget),
          target_(target) {}

    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        const auto& quotes = *req.auctions;
        out.resize(quotes.size());
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            out[i] = bid_linear(quotes[i].ctr, quotes[i].cvr, 1.0, target_) * multiplier_;
        }
    }

    void observe(const TimestepOutcomeSummary& summary) override {
        const PacingErrors errors = budget_pacing_errors(b0_, total_timesteps_, summary.timestep,
                                                         summary.balance, prev_balance_);
        integral_ += errors.e;
        multiplier_ = exp_actuator(multiplier_, adjustment(errors));
        prev_balance_ = summary.balance;
    }

protected:
    virtual double adjustment(const PacingErrors& errors) = 0;

    double integral() const { return integral_; }

private:
    double b0_;
    int total_timesteps_;
    double prev_balance_;
    double multiplier_ = 1.0;
    double integral_ = 0.0;
    TargetMetric target_;
};

class FbBidder : public PacingControllerBidder {
public:
    FbBidder(double l1, double l2, double l3, const SellerContext& ctx, TargetMetric target)
        : PacingControllerBidder(ctx, target), l1_(l1), l2_(l2), l3_(l3) {}

private:
    double adjustment(const PacingErrors& errors) override {
        return fb_adjust(l1_, l2_, l3_, errors.e, integral(), errors.e_g);
    }

    double l1_, l2_, l3_;
};

class FbWlBidder : public PacingControllerBidder {
public:
    FbWlBidder(double l4, const SellerContext& ctx, TargetMetric target)
        : PacingControllerBidder(ctx, target), l4_(l4) {}

private:
    double adjustment(const PacingErrors& errors) override {
        phi_ = fbwl_adjust(phi_, l4_, errors.e);
        return phi_;
    }

    double l4_;
    double phi_ = 0.0;
};

class MystiqueBidder : public PacingControllerBidder {
public:
    MystiqueBidder(double w_s, double w_g, const SellerContext& ctx, TargetMetric target)
        : PacingControllerBidder(ctx, target), w_s_(w_s), w_g_(w_g) {}

private:
    double adjustment(const PacingErrors& errors) override {
        phi_ = mystique_adjust(phi_, w_s_, errors.e, w_g_, errors.e_g);
        return phi_;
    }

    double w_s_, w_g_;
    double phi_ = 0.0;
};

// Two PID loops: one keeps the balance on the uniform-pacing line, the other
// keeps the running eCPC at the CPC bound. Their signals drive the p and q
// duals of the opt bid; the optional mixing matrix cross-couples them.
class PidBidder : public Bidder {
public:
    struct Params {
        double p0 = 1.0;
        double q0 = 1.0;
        PidGains budget;
        PidGains ecpc;
        bool mixed = false;
        double gamma_p = 1.0;
        double gamma_q = 1.0;
    };

    PidBidder(const Params& params, const SellerContext& ctx, TargetMetric target)
        : params_(params),
          p_(params.p0),
          q_(params.q0),
          b0_(ctx.initial_budget),
          total_timesteps_(ctx.total_timesteps),
          prev_balance_(ctx.initial_budget),
          target_(target) {}

    void bids(const TimestepRequest& req, std::vector<double>& out) override {
        const auto& quotes = *req.auctions;
        out.resize(quotes.size());
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            out[i] = bid_opt(quotes[i].ctr, quotes[i].cvr, p_, q_, target_, req.cpc_bound);
        }
    }

    void observe(const TimestepOutcomeSummary& summary) override {
        const PacingErrors budget = budget_pacing_errors(b0_, total_timesteps_, summary.timestep,
                                                         summary.balance, prev_balance_);
        integral_p_ += budget.e;
        prev_balance_ = summary.balance;

        cum_cost_ += summary.cost;
        cum_clicks_ += summary.clicks;
        double e_q = 0.0;
        double e_g_q = 0.0;
        if (cum_clicks_ > 0) {
            const double ecpc = cum_cost_ / static_cast<double>(cum_clicks_);
            e_q = cpc_target_ - ecpc;
            if (have_prev_ecpc_) e_g_q = ecpc - prev_ecpc_;
            prev_ecpc_ = ecpc;
            have_prev_ecpc_ = true;
        }
        integral_q_ += e_q;

        double phi_p = pid_signal(params_.budget, budget.e, integral_p_, budget.e_g);
        double phi_q = pid_signal(params_.ecpc, e_q, integral_q_, e_g_q);
        if (params_.mixed) {
            const MpidMix mixed = mpid_mix(params_.gamma_p, params_.gamma_q, phi_p, phi_q);
            phi_p = mixed.phi_p;
            phi_q = mixed.phi_q;
        }
        p_ = exp_actuator(p_, phi_p);
        q_ = exp_actuator(q_, phi_q);
    }

    void set_cpc_target(double cpc) { cpc_target_ = cpc; }

private:
    Params params_;
    double p_;
    double q_;
    double b0_;
    int total_timesteps_;
    double prev_balance_;
    double integral_p_ = 0.0;
    double integral_q_ = 0.0;
    double cum_cost_ = 0.0;
    std::int64_t cum_clicks_ = 0;
    double prev_ecpc_ = 0.0;
    bool have_prev_ecpc_ = false;
    double cpc_target_ = 0.0;
    TargetMetric target_;
};

PidGains read_gains(const AlgorithmSpec& spec, const char* suffix) {
    PidGains g;
    g.kp = spec.param(std::string("kp_") + suffix);
    g.ki = spec.param(std::string("ki_") + suffix);
    g.kd = spec.param(std::string("kd_") + suffix);
    return g;
}

std::unique_ptr<Bidder> make_pid(const AlgorithmSpec& spec, const SellerContext& ctx, bool mixed) {
    PidBidder::Params params;
    params.p0 = spec.param("p0");
    params.q0 = spec.param("q0");
    require(params.p0 > 0.0, spec, "p0 must be positive");
    require(params.q0 > 0.0, spec, "q0 must be positive");
    params.budget = read_gains(spec, "p");
    params.ecpc = read_gains(spec, "q");
    params.mixed = mixed;
    if (mixed) {
        params.gamma_p = spec.param("gamma_p");
        params.gamma_q = spec.param("gamma_q");
    }
    auto bidder = std::make_unique<PidBidder>(params, ctx, spec.target_metric);
    bidder->set_cpc_target(ctx.cpc_bound);
    return bidder;
}

}  // namespace

std::unique_ptr<Bidder> make_bidder(const AlgorithmSpec& spec, const SellerContext& ctx) {
    require_finite_params(spec);
    switch (spec.kind) {
        case AlgorithmKind::Constant: {
            const double bid0 = spec.param("bid0");
            require(bid0 >= 0.0, spec, "bid0 must be >= 0");
            return std::make_unique<ConstantBidder>(bid0);
        }
        case AlgorithmKind::Random: {
            double lo = ctx.bid_min;
            double hi = ctx.bid_max;
            if (!(hi > lo)) {  // no usable history segment
                lo = 0.0;
                hi = ctx.cpc_bound;
            }
            return std::make_unique<RandomBidder>(lo, hi, ctx);
        }
        case AlgorithmKind::Linear: {
            const double alpha = spec.param("alpha");
            require(alpha >= 0.0, spec, "alpha must be >= 0");
            return std::make_unique<LinearBidder>(alpha, spec.target_metric);
        }
        case AlgorithmKind::CostMax: {
            const double b = spec.param("b");
            require(b >= 0.0, spec, "b must be >= 0");
            return std::make_unique<CostMaxBidder>(b, spec.target_metric);
        }
        case AlgorithmKind::Ortb1:
        case AlgorithmKind::Ortb2: {
            const double c = spec.param("c");
            const double lambda = spec.param("lambda");
            require(c > 0.0, spec, "c must be positive");
            require(lambda > 0.0, spec, "lambda must be positive");
            return std::make_unique<OrtbBidder>(spec.kind == AlgorithmKind::Ortb2, c, lambda,
                                                spec.target_metric);
        }
        case AlgorithmKind::Opt: {
            const double p = spec.param("p");
            const double q = spec.param("q");
            require(p >= 0.0, spec, "p must be >= 0");
            require(q >= 0.0, spec, "q must be >= 0");
            require(p + q > 0.0, spec, "p + q must be positive");
            return std::make_unique<OptBidder>(p, q, spec.target_metric);
        }
        case AlgorithmKind::Broi: {
            const double mu0 = spec.param_or("mu0", 0.0);
            const double eta = spec.param("eta");
            require(mu0 > -1.0, spec, "mu0 must keep 1 + mu positive");
            require(eta >= 0.0, spec, "eta must be >= 0");
            return std::make_unique<DualPacingBidder>(AlgorithmKind::Broi, mu0, eta, 0.0, ctx,
                                                      spec.target_metric);
        }
        case AlgorithmKind::Cb: {
            const double a_scale = spec.param("a_scale");
            const double lambda0 = spec.param_or("lambda0", 0.0);
            const double eta = spec.param("eta");
            require(a_scale >= 0.0, spec, "a_scale must be >= 0");
            require(lambda0 > -1.0, spec, "lambda0 must keep 1 + lambda positive");
            require(eta >= 0.0, spec, "eta must be >= 0");
            return std::make_unique<DualPacingBidder>(AlgorithmKind::Cb, lambda0, eta, a_scale, ctx,
                                                      spec.target_metric);
        }
        case AlgorithmKind::Fb:
            return std::make_unique<FbBidder>(spec.param("lambda1"), spec.param("lambda2"),
                                              spec.param("lambda3"), ctx, spec.target_metric);
        case AlgorithmKind::FbWl:
            return std::make_unique<FbWlBidder>(spec.param("lambda4"), ctx, spec.target_metric);
        case AlgorithmKind::Mystique:
            return std::make_unique<MystiqueBidder>(spec.param("w_s"), spec.param("w_g"), ctx,
                                                    spec.target_metric);
        case AlgorithmKind::Pid:
            return make_pid(spec, ctx, false);
        case AlgorithmKind::Mpid:
            return make_pid(spec, ctx, true);
        case AlgorithmKind::External: {
            if (!spec.external) throw ConfigError("external: missing endpoint configuration");
            return make_external_bidder(spec, ctx);
        }
    }
    throw ConfigError("unhandled algorithm kind");
}

}  // namespace arena
