#pragma once

#include "arena/rng.hpp"

namespace arena {

// CTR/CVR estimates stay strictly inside (0, 1) so Bernoulli sampling and
// ratio statistics never degenerate.
inline constexpr double kProbClipLo = 1e-6;
inline constexpr double kProbClipHi = 1.0 - 1e-6;

struct CtrCvr {
    double ctr = 0.0;
    double cvr = 0.0;
};

// Larger root of the quadratic tying the two factors together:
//   a = (eps - 2*beta + sqrt((eps + 2*beta)^2 + 8p)) / 4
// With ctr = 2a - eps and cvr = a + beta the product ctr * cvr equals p for
// any eps, beta (the cross terms cancel algebraically), and both factors stay
// positive even when a itself dips below zero (eps * beta < -p).
double decomposition_root(double p, double epsilon, double beta);

// Split p into (ctr, cvr) with ctr * cvr == p before clipping. Noise terms
// are the caller's; use (0, 0) for the deterministic split ctr = 2 * cvr.
// Throws std::domain_error unless p is in (0, 1).
CtrCvr decompose_pvalue(double p, double epsilon, double beta);

// Randomized split: eps, beta ~ N(0, p/8) drawn from `rng` (two draws, eps
// first). Keeps the mean ctr:cvr ratio near 2:1 while the product stays p.
CtrCvr sample_decomposition(double p, RandomStream& rng);

}  // namespace arena
