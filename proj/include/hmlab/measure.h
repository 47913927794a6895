#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hmlab/geometry.h"

namespace hmlab {

/// Finite measure stored as weighted atoms. Coordinates are kept flat,
/// row-major, `dim` values per atom.
class PointMeasure {
public:
    PointMeasure() = default;
    /// Empty measure in R^dim with intrinsic dimension n (usually dim - 1).
    PointMeasure(int dim, int n);
    PointMeasure(int dim, int n, std::vector<double> coords, std::vector<double> weights);

    int dim() const { return dim_; }
    int n() const { return n_; }
    std::size_t size() const { return weights_.size(); }
    bool empty() const { return weights_.empty(); }

    PointView point(std::size_t i) const {
        return PointView(coords_.data() + i * static_cast<std::size_t>(dim_),
                         static_cast<std::size_t>(dim_));
    }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& coords() const { return coords_; }

    void add(PointView p, double w);
    double total_mass() const;

    /// Sub-measure on the given atom indices, in the order given.
    PointMeasure restricted(std::span<const std::size_t> indices) const;
    PointMeasure with_weights(std::vector<double> weights) const;

private:
    void validate() const;

    int dim_ = 2;
    int n_ = 1;
    std::vector<double> coords_;
    std::vector<double> weights_;
};

/// Uniform-grid bucketing of the atoms for ball queries. Falls back to a
/// linear scan when the query ball covers too many buckets.
class BallIndex {
public:
    BallIndex(const PointMeasure& mu, double cell);

    /// Indices of atoms in the closed ball, ascending.
    std::vector<std::size_t> query(PointView center, double radius) const;
    double mass(PointView center, double radius) const;

private:
    const PointMeasure* mu_;
    double cell_;
    std::vector<double> lo_;
    std::vector<long> extent_;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> order_;
};

double mass(const PointMeasure& mu, const Ball& ball);
double mass(const PointMeasure& mu, std::span<const std::size_t> indices);
std::vector<std::size_t> members(const PointMeasure& mu, const Ball& ball);

/// Θ(B) = μ(B) / (2 r(B))^n.
double density(const PointMeasure& mu, const Ball& ball);

/// Minimum pairwise distance between distinct atoms; +inf for fewer than
/// two atoms.
double resolution_scale(const PointMeasure& mu);

struct GrowthResult {
    double value = 0.0;
    bool infinite = false;
    /// Some probe radius was below the resolution scale.
    bool below_resolution = false;
};

/// sup over probes of μ(B)/r(B)^n.
GrowthResult growth_constant(const PointMeasure& mu, std::span<const Ball> probes);

/// Default probe set: balls centered at every atom with radius equal to
/// every pairwise distance at least `resolution` (default: the resolution
/// scale). Evaluated exactly by sorting distances per center.
GrowthResult growth_constant(const PointMeasure& mu, std::optional<double> resolution = {});

/// μ(aB) <= b μ(B). A zero-mass ball is doubling iff aB has zero mass too.
bool is_doubling_ball(const PointMeasure& mu, const Ball& ball, double a, double b);

std::vector<double> default_t_grid();

/// (t, μ(shell_t) / (t μ(2B))) where shell_t = {x in 2B : dist(x, ∂B) <= t r}.
/// Empty when μ(2B) = 0.
std::vector<std::pair<double, double>> thin_boundary_profile(const PointMeasure& mu,
                                                             const Ball& ball,
                                                             std::span<const double> t_grid);

struct ThinBall {
    Ball ball;
    double worst_ratio = 0.0;
};

/// Concentric ball with radius in [s_lo, s_hi] * r(inner) whose worst
/// profile ratio is minimal over a 64-point uniform radius grid; throws
/// NoThinBall when the minimum exceeds C1.
ThinBall find_thin_boundary_ball(const PointMeasure& mu, const Ball& inner, double s_lo,
                                 double s_hi, double C1);

struct AdRegularity {
    double lower = 0.0;
    double upper = 0.0;
    bool degenerate = false;
};

/// inf and sup of μ(B(x,r))/r^n over atoms x and r in [r_min, r_max],
/// computed exactly from the step structure of r -> μ(B(x,r)).
AdRegularity ad_regularity(const PointMeasure& mu, double r_min, double r_max);
AdRegularity ad_regularity(const PointMeasure& mu, std::span<const Ball> probes);

/// Builtin generators. Arclength-type measures have total mass equal to the
/// length of the curve unless stated otherwise.
namespace generators {
/// N atoms at midpoints of [a, b] split in N equal pieces, weight |b-a|/N.
PointMeasure segment(std::size_t N, const Point& a, const Point& b);
/// Unit segment [0,1] x {0} with total mass 1.
PointMeasure unit_segment(std::size_t N);
PointMeasure circle(std::size_t N, const Point& center, double radius);
/// Boundary of [-h, h]^2, N atoms equally spaced in arclength.
PointMeasure square_boundary(std::size_t N, double h = 1.0);
/// Two equal clusters of N/2 atoms each, width `width`, centers `separation` apart.
PointMeasure two_cluster(std::size_t N, double width, double separation);
/// Fibonacci lattice on a sphere in R^3, surface-area weights.
PointMeasure sphere_shell(std::size_t N, double radius);
/// Two horizontal unit segments at vertical distance `gap`.
PointMeasure parallel_segments(std::size_t N, double gap);
/// Unit segment plus a tight cluster of atoms near its middle carrying
/// `cluster_mass` in total.
PointMeasure segment_plus_cluster(std::size_t N, std::size_t cluster_atoms, double cluster_width,
                                  double cluster_mass);
}  // namespace generators

}  // namespace hmlab
