#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmlab/domain.h"
#include "hmlab/lattice.h"
#include "hmlab/measure.h"
#include "hmlab/riesz.h"
#include "hmlab/walk.h"

namespace hmlab {

struct StoppingConfig {
    double A = 50.0;
    double eps = 0.1;
    double eps_prime = 0.5;
    double eta = 0.02;
    double tau = 0.1;
    double lambda0 = 0.05;
    double delta0 = 0.125;
    double C1 = 10.0;
    double C2 = 40.0;
    /// Corona nodes whose ball B holds fewer atoms are left unresolved.
    std::size_t min_atoms = 8;
    std::size_t corkscrew_samples = 1024;

    /// λ = 1 - ε / (2 C1 C2).
    double lambda() const { return 1.0 - eps / (2.0 * C1 * C2); }
    double alpha() const { return 1.0 / lambda(); }
    double kappa() const { return delta0 / 2.0; }
    /// Throws ConfigError on out-of-range fields.
    void validate() const;
};

struct B0Result {
    Ball B;
    Ball B0;
    double lambda = 1.0;
    double thin_ratio = 0.0;
    double mu_2B = 0.0;
    double mu_half_delta_B = 0.0;
    /// μ(2 B0) <= 2 C2 μ(B0).
    double mu_2B0 = 0.0;
    double mu_B0 = 0.0;
    bool mu_doubling = false;
    /// μ(B) <= C2 μ(B0).
    double mu_B = 0.0;
    bool mu_B_bound = false;
    /// ω(α B0) <= (1 - ε')^-1 ω(B0), when ω is supplied.
    bool omega_checked = false;
    double omega_B = 0.0;
    double omega_B0 = 0.0;
    bool omega_doubling = false;
};

/// B0 = λB after checking that B has C1-thin boundary and
/// μ(2B) <= C2 μ(δ0 B / 2); throws PreconditionFailed otherwise.
B0Result make_B0(const PointMeasure& mu, const Ball& B, const StoppingConfig& cfg,
                 const std::vector<double>* omega = nullptr);

/// Harmonic measure binned onto the atoms of μ: every valid exit counts
/// for its nearest atom.
struct OmegaOnMu {
    std::vector<double> omega;  ///< per μ atom, sums to 1 over valid exits
    std::size_t N = 0;
    std::uint64_t seed = 0;
    /// σ = ω restricted to the window, on the atoms carrying exits.
    PointMeasure sigma;
    std::vector<std::size_t> mu_of_sigma;
    Ball window;
};

OmegaOnMu bin_omega(const ExitDistribution& exits, const PointMeasure& mu, const Ball& window);
/// Same from precomputed per-atom weights.
OmegaOnMu omega_from_weights(std::vector<double> omega, const PointMeasure& mu, const Ball& window,
                             std::size_t N = 0, std::uint64_t seed = 0);

struct BadCubeReport {
    std::vector<std::size_t> bad1;
    std::vector<std::size_t> bad2;
    std::vector<std::size_t> good;  ///< good cells meeting B0
    std::vector<std::size_t> G0;    ///< μ atoms of B0 outside every bad cell
    std::vector<double> cell_mu;  ///< μ mass per ω-cell id
    /// μ atoms attributed to each ω-cell (nearest σ atom), ascending.
    std::vector<std::vector<std::size_t>> cell_atoms;
    /// Nearest σ atom of every μ atom in the window; npos elsewhere.
    std::vector<std::size_t> sigma_of_mu;

    double mu_B0 = 0.0, omega_B0 = 0.0;
    double mu_alphaB0 = 0.0, omega_alphaB0 = 0.0;
    double mu_bad1 = 0.0, omega_bad1 = 0.0, mu_bad2 = 0.0, omega_bad2 = 0.0;
    double mu_bad1_B0 = 0.0, omega_bad2_B0 = 0.0;
    double mu_G0 = 0.0, omega_G0 = 0.0;
    /// ω(Bad1) A / ω(B0) and μ(Bad2) A / μ(B0).
    double bad1_constant = 0.0, bad2_constant = 0.0;
    double eps1_prime = 0.0, eps2_prime = 0.0;
    /// Range of (ω(Q)/μ(Q)) / (ω(B0)/μ(B0)) over good cells with μ(Q) > 0.
    double poisson_lower = 0.0, poisson_upper = 0.0;
    /// A∞ constant achieved on B0 at budget ε/2, and the largest μ share of a
    /// set with ω share at most 1 - that constant (complement identity).
    double ainfty_eps_prime = 0.0;
    double complement_mu_share = 0.0;
    std::size_t N = 0;
    std::uint64_t seed = 0;
    double omega_B0_stderr = 0.0;
    double omega_G0_stderr = 0.0;
};

/// Maximal cells of the ω-lattice inside α B0 with ω/μ too small (Bad1) or
/// too large (Bad2), relative to B0. Throws EmptyG0.
BadCubeReport classify_bad(const DMLattice& lat_omega, const OmegaOnMu& om, const PointMeasure& mu,
                           const Ball& B0, const StoppingConfig& cfg);

struct GrowthCheck {
    double cell_constant = 0.0;
    std::size_t cells_tested = 0;
    double ball_constant = 0.0;
    std::size_t points_tested = 0;
};

GrowthCheck growth_check(const DMLattice& lat_omega, const OmegaOnMu& om, const PointMeasure& mu,
                         const BadCubeReport& report, const Ball& B0, const StoppingConfig& cfg);

struct KeyLemmaResult {
    double worst = 0.0;
    std::size_t worst_cell = 0;
    std::size_t probes = 0;
    std::size_t points = 0;
    /// sup_t |R_t ω(x)| μ(B0)/ω(B0) over G0 minus B(x_B, η r(B)).
    double maximal_worst = 0.0;
    std::size_t maximal_points = 0;
};

/// Throws EmptyProbeFamily when no good cell meets the side conditions.
KeyLemmaResult key_lemma_check(const DMLattice& lat_omega, const OmegaOnMu& om, const PointMeasure& mu,
                               const BadCubeReport& report, const Ball& B0, const Ball& B, PointView x_B,
                               const StoppingConfig& cfg);

struct T1Result {
    double C4 = 0.0;
    double C5 = 0.0;
    double delta1 = 1.0;
    bool degenerate = true;
    double nu_norm = 0.0;
    /// ‖ν‖ / μ(B0), expected in [1, (1 - ε')^-1].
    double nu_norm_ratio = 0.0;
    bool nu_norm_ok = false;
    std::vector<std::size_t> G1;  ///< μ atom indices
    OperatorNorm op;
    double op_eps = 0.0;
};

/// ν = μ(B0)/ω(B0) ω|αB0 against H = αB0 minus G̃1, with G̃1 = G0 minus
/// B(x_B, η r(B)).
T1Result t1_hypotheses(const OmegaOnMu& om, const PointMeasure& mu, const BadCubeReport& report,
                       const Ball& B0, const Ball& B, PointView x_B, const StoppingConfig& cfg);

enum class CoronaLabel { Nice, Ugly, Unresolved };
std::string to_string(CoronaLabel label);

struct NiceUgly {
    CoronaLabel label = CoronaLabel::Unresolved;
    std::string note;
    double lambda_used = 0.0;
    double q_lambda_mass = 0.0;
    bool q_lambda_ok = false;
    Ball B_prime;
    Ball B;
    double thin_ratio = 0.0;
    Point x_B;
    bool x_B_proxy = true;
    /// μ(2B) / μ(δ0 B / 2), to be compared with C2.
    double c2_achieved = 0.0;
    /// supp μ ∩ 2B lies in Q.
    bool two_B_in_Q = false;
    Ball witness;  ///< B(x_B, η r(B))
    double mu_witness = 0.0;
    double mu_B = 0.0;
    std::vector<std::size_t> good_set;  ///< nice cells only
    double good_mass = 0.0;
    double separation = 0.0;
    bool separation_ok = false;
};

/// Nice/ugly test of a lattice cell through alternative (i). x_B is a
/// corkscrew point of κB when `dom` is given, else the atom of B with the
/// heaviest ball of radius η r(B) (flagged as a proxy).
/// Propagates NoThinBall and NoInteriorPoint.
NiceUgly classify_nice_ugly(const DMLattice& lat, std::size_t q, const StoppingConfig& cfg,
                            const Domain* dom = nullptr, std::uint64_t seed = 0);

struct CoronaNode {
    std::size_t cell = 0;
    int level = 0;
    std::optional<std::size_t> parent;  ///< node index
    NiceUgly info;
    double theta = 0.0;
    double mass = 0.0;
    double theta_mu = 0.0;
    std::optional<std::size_t> p_tilde;
    std::optional<std::size_t> p_q;
    int stop_generation = 0;
    std::vector<std::size_t> stop;  ///< cell ids
    std::vector<std::size_t> next;  ///< node indices
    double next_sum = 0.0;
    bool eq10_ok = true;
    bool depth_exhausted = false;
};

struct CoronaTree {
    const DMLattice* lattice = nullptr;
    std::size_t root_cell = 0;
    std::vector<CoronaNode> nodes;
    std::size_t eq10_violations = 0;
    std::size_t depth_exhausted = 0;
    std::size_t unresolved = 0;
    bool truncated = false;

    nlohmann::json to_json() const;
};

/// Stop/Next/Top iteration from the doubling root R. Throws
/// PreconditionFailed when R is not doubling.
CoronaTree build_corona(const DMLattice& lat_mu, std::size_t root, const StoppingConfig& cfg,
                        const Domain* dom = nullptr, std::size_t max_nodes = 100000);

/// Σ_{Q in Top} Θ(Q) μ(Q) / μ(R).
double packing_check(const CoronaTree& tree);

struct RStarL1 {
    double normalized = 0.0;  ///< ‖R_* ν‖_{L¹(ν)} / ν(R)
    double nu_mass = 0.0;
    std::size_t atoms = 0;
    /// Integrals of the three parts of the level splitting, normalized.
    double tail = 0.0;
    double ugly_levels = 0.0;
    double nice_levels = 0.0;
    /// R_* ν(x) <= tail + ugly + nice held at every atom.
    bool splitting_ok = true;
};

RStarL1 r_star_l1_check(const CoronaTree& tree);

/// Atoms of G̃_R: R outside the nice cells plus the good sets of the nice cells.
std::vector<std::size_t> good_set_of_root(const CoronaTree& tree);

}  // namespace hmlab
