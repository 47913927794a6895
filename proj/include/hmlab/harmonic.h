#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hmlab/domain.h"
#include "hmlab/measure.h"
#include "hmlab/walk.h"

namespace hmlab {

/// Partition (or partial partition) of the boundary. classify returns the
/// piece of an exit point, or -1 when it lies in none.
struct Targets {
    std::size_t count = 0;
    std::function<int(PointView exit, int side)> classify;
    bool partial = false;
};

/// k equal arcs of the unit circle, arc j = [phase + 2πj/k, phase + 2π(j+1)/k).
Targets arc_targets(std::size_t k, double phase = 0.0);
/// Sides of [-1,1]^2: bottom, right, top, left.
Targets square_side_targets();
/// First ball containing the exit; partial coverage.
Targets ball_targets(std::vector<Ball> balls);
/// B ∩ ∂Ω cut into k slabs along `axis` (unit vector); with split_sides the
/// two sides of a slit get separate pieces (2k in total).
Targets ball_pieces(const Ball& B, std::size_t k, const Point& axis, bool split_sides = false);

struct HarmonicMeasure {
    std::vector<std::size_t> counts;
    std::vector<double> prob;
    std::vector<double> stderr_;
    std::size_t walks = 0;
    std::size_t valid = 0;
    std::size_t unassigned = 0;
    std::uint64_t seed = 0;
    double shell_eps = 0.0;
    double discard_fraction = 0.0;
};

HarmonicMeasure tally(const ExitDistribution& dist, const Targets& targets);
std::vector<int> target_ids(const ExitDistribution& dist, const Targets& targets);

HarmonicMeasure harmonic_measure(const Domain& dom, PointView x, const Targets& targets, std::size_t N,
                                 std::uint64_t seed, const WalkParams& params = {});

/// Poisson kernel mass of the arc [th0, th1] of the unit circle seen from
/// x (composite Simpson rule).
double disk_poisson_arc(PointView x, double th0, double th1);
/// Green function of the unit disk, normalized as -Δ G = δ.
double disk_green(PointView x, PointView y);

struct Corkscrew {
    Point point;
    double c = 0.0;
};

/// Best of `samples` quasi-random points of B(xi, r) for
/// min(-sdf(x), r - |x - xi|). Throws NoInteriorPoint.
Corkscrew corkscrew_point(const Domain& dom, PointView xi, double r, std::size_t samples,
                          std::uint64_t seed = 0);

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t N = 0;
    std::uint64_t seed = 0;
};

/// ℰ(x - y) - mean ℰ(x - z) over exits z of walks from y.
Estimate green_from_exits(PointView x, const ExitDistribution& from_y);
Estimate green_estimate(const Domain& dom, PointView x, PointView y, std::size_t N, std::uint64_t seed,
                        const WalkParams& params = {});

/// Mean of G(x0, y) over quasi-uniform y on the sphere of radius
/// d(x0)/4 about x0.
Estimate rho(const Domain& dom, PointView x0, std::size_t sphere_samples, std::size_t N_per_sample,
             std::uint64_t seed, const WalkParams& params = {});

struct BourgainResult {
    double worst = 0.0;
    std::vector<double> ratios;
    std::vector<double> stderrs;
    double mu_delta_ball = 0.0;
    bool vacuous = false;
};

/// min over poles of ω^x(B(xi, r)) (δ r)^n / μ(B(xi, δ r)).
BourgainResult bourgain_check(const Domain& dom, const PointMeasure& mu_boundary, PointView xi, double r,
                              double delta, std::span<const Point> poles, std::size_t N,
                              std::uint64_t seed, const WalkParams& params = {});

/// Quasi-random interior points of `ball`.
std::vector<Point> interior_samples(const Domain& dom, const Ball& ball, std::size_t count,
                                    std::uint64_t seed);

struct GreenOmegaResult {
    std::vector<double> ratio;
    std::vector<double> stderrs;
    double omega_xB = 0.0;
    double rho_xB = 0.0;
    double spread = 0.0;  ///< max / min ratio
    bool negative_control = false;
};

/// Per x: ω^x(B) / (ω^{x_B}(B) ρ(x_B)^{-1} G(x, x_B)). The walks from x_B
/// serve both ω^{x_B}(B) and every G(x, x_B).
GreenOmegaResult green_omega_relation(const Domain& dom, const Ball& B, PointView x_B,
                                      std::span<const Point> xs, std::size_t N, std::uint64_t seed,
                                      const WalkParams& params = {}, std::size_t rho_samples = 16);

struct ChangeOfPoleResult {
    double quotient = 1.0;
    /// Standard error of log(quotient) at the worst group (delta method).
    double log_stderr = 0.0;
    std::vector<double> ratio1;
    std::vector<double> ratio2;
    std::vector<std::vector<int>> groups;  ///< original pieces per group
    std::size_t merged = 0;                ///< pieces absorbed into a neighbor
    double omega1_B = 0.0;
    double omega2_B = 0.0;
};

/// Both poles use the same seed, so p1 == p2 gives quotient 1 exactly.
/// Throws PreconditionFailed when dist(p_i, B) < r(B) / c0.
ChangeOfPoleResult change_of_pole(const Domain& dom, const Ball& B, const Targets& pieces, PointView p1,
                                  PointView p2, double c0, std::size_t N, std::uint64_t seed,
                                  const WalkParams& params = {});

struct HarnackFunction {
    enum class Kind { HarmonicMeasureOfBall, GreenWithPole };
    Kind kind = Kind::HarmonicMeasureOfBall;
    Ball ball;   ///< B* for harmonic measure
    Point pole;  ///< p for the Green function

    bool operator==(const HarnackFunction& o) const {
        return kind == o.kind && ball.center == o.ball.center && ball.radius == o.ball.radius && pole == o.pole;
    }
};

struct HarnackResult {
    double oscillation = 1.0;
    std::vector<double> ratios;
    std::vector<double> u;
    std::vector<double> v;
};

/// max / min of u/v over the probes; u and v at a probe share one batch.
HarnackResult boundary_harnack_check(const Domain& dom, PointView xi, double r, double A1,
                                     const HarnackFunction& u, const HarnackFunction& v,
                                     std::span<const Point> probes, std::size_t N, std::uint64_t seed,
                                     const WalkParams& params = {});

struct AinftyResult {
    double eps_prime = 0.0;
    /// An atom with μ = 0 and ω > 0 was taken.
    bool zero_mu_hit = false;
    /// The budget ended inside an atom.
    bool fractional = false;
    std::size_t atoms_taken = 0;
};

/// Worst ε' for the budget ε μ(B): greedy by ω/μ with one fractional atom.
AinftyResult ainfty_scan(std::span<const double> mu, std::span<const double> omega, double eps);

/// Seed for sub-experiment j of a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t j);

}  // namespace hmlab
