#include "arena/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace arena {

double decomposition_root(double p, double epsilon, double beta) {
    const double s = epsilon + 2.0 * beta;
    return 0.25 * (epsilon - 2.0 * beta + std::sqrt(s * s + 8.0 * p));
}

CtrCvr decompose_pvalue(double p, double epsilon, double beta) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw std::domain_error("p-value must lie in (0, 1)");
    }
    const double a = decomposition_root(p, epsilon, beta);
    CtrCvr out;
    out.ctr = std::clamp(2.0 * a - epsilon, kProbClipLo, kProbClipHi);
    out.cvr = std::clamp(a + beta, kProbClipLo, kProbClipHi);
    return out;
}

CtrCvr sample_decomposition(double p, RandomStream& rng) {
    const double sigma = std::sqrt(p / 8.0);
    const double epsilon = rng.normal(0.0, sigma);
    const double beta = rng.normal(0.0, sigma);
    return decompose_pvalue(p, epsilon, beta);
}

}  // namespace arena
