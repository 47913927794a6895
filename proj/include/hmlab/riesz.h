#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hmlab/measure.h"

namespace hmlab {

/// Normalizations of the fundamental solution ℰ. Defaults: c1 = 1/(2π)
/// and cn = 1/((n-1) |S^n|), so that -Δℰ = δ in R^{n+1}.
struct RieszConfig {
    int n = 1;
    double c1 = 0.0;
    double cn = 0.0;

    static RieszConfig standard(int n);
    int ambient_dim() const { return n + 1; }
};

/// cn |x|^{1-n} for n >= 2, -c1 log|x| for n = 1.
double fundamental_solution(const RieszConfig& cfg, PointView x);

/// x / |x|^{n+1}.
Point riesz_kernel(const RieszConfig& cfg, PointView x);

/// Σ_{|x - y_i| > eps} K(x - y_i) f_i w_i, summed in atom order. An empty
/// `f` means f = 1; signed densities go through `f`.
Point truncated_riesz(const RieszConfig& cfg, const PointMeasure& nu, std::span<const double> f,
                      PointView x, double eps);

/// R_{eps1} - R_{eps2}, formed literally from the two truncations.
Point double_truncation(const RieszConfig& cfg, const PointMeasure& nu, std::span<const double> f,
                        PointView x, double eps1, double eps2);

/// sup_{eps > delta} |R_eps ν(x)|, exact: the truncation only changes at
/// the atom distances. Distances equal to within a relative 1e-9 are
/// treated as one.
double maximal_riesz(const RieszConfig& cfg, const PointMeasure& nu, std::span<const double> f,
                     PointView x, double delta);

struct MaximalDensity {
    double value = 0.0;
    /// The supremum is the limit r -> delta+ and is not attained.
    bool open_endpoint = false;
};

/// sup_{r > delta} |ν|(B(x,r)) / r^n over closed balls.
MaximalDensity maximal_density(const RieszConfig& cfg, const PointMeasure& nu, PointView x,
                               double delta);

struct OperatorNorm {
    double norm = 0.0;
    std::size_t iterations = 0;
    bool converged = true;
};

/// Norm of the eps-truncated transform L²(μ|subset) -> L²(μ|subset; R^d),
/// i.e. the top singular value of D^{1/2} K D^{1/2}, by power iteration on
/// AᵀA (tolerance 1e-8 on the relative change, at most 1e4 iterations).
OperatorNorm operator_norm_l2(const RieszConfig& cfg, const PointMeasure& mu,
                              std::span<const std::size_t> subset, double eps);

/// Same, over every atom.
OperatorNorm operator_norm_l2(const RieszConfig& cfg, const PointMeasure& mu, double eps);

/// Dense block matrix A (d·m rows, m columns) used by operator_norm_l2,
/// exposed for oracles.
std::vector<double> truncated_riesz_matrix(const RieszConfig& cfg, const PointMeasure& mu,
                                           std::span<const std::size_t> subset, double eps);

}  // namespace hmlab
