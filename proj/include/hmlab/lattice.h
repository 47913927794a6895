#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmlab/measure.h"

namespace hmlab {

struct DMCell {
    int generation = 0;
    std::size_t center_index = 0;  ///< atom index of z_Q
    Point center;
    double radius = 0.0;  ///< r(Q)
    std::vector<std::size_t> members;  ///< ascending atom indices
    std::optional<std::size_t> parent;
    std::vector<std::size_t> children;
    bool doubling = false;
    double mass = 0.0;

    Ball ball() const { return Ball{center, radius}; }
};

struct LatticeParams {
    double C0 = 128.0;
    /// Unset: 1e4 when that resolves at least three generations of the
    /// support, otherwise max(64, 2 C0) with `relaxed_A0` raised.
    std::optional<double> A0;
    /// Unset: the coarsest generation whose radius covers the support.
    std::optional<int> k0;
    /// Unset: stop at the first generation made only of singletons.
    std::optional<int> k_max;
};

class DMLattice {
public:
    const PointMeasure& measure() const { return sigma_; }
    double C0() const { return C0_; }
    double A0() const { return A0_; }
    int k0() const { return k0_; }
    int k_max() const { return k0_ + static_cast<int>(generations_.size()) - 1; }
    std::size_t generation_count() const { return generations_.size(); }
    /// A0 was lowered below 5000 C0 (or set there by the caller).
    bool relaxed_A0() const { return relaxed_A0_; }
    /// The construction needed the jittered retry.
    bool retried() const { return retried_; }
    /// Automatic depth stopped with coincident atoms still sharing cells.
    bool unresolved_duplicates() const { return unresolved_duplicates_; }

    const std::vector<DMCell>& cells() const { return cells_; }
    const DMCell& cell(std::size_t id) const { return cells_[id]; }
    /// Cell ids of generation k, in construction order.
    const std::vector<std::size_t>& generation(int k) const;
    /// Id of the generation-k cell containing atom i.
    std::size_t cell_of(int k, std::size_t i) const;

    /// ℓ(Q) = 56 C0 A0^-k.
    double side_length(int k) const;
    double side_length(const DMCell& q) const { return side_length(q.generation); }
    /// Θ(Q) = σ(Q) / ℓ(Q)^n.
    double theta(const DMCell& q) const;

    bool is_ancestor(std::size_t ancestor, std::size_t descendant) const;
    /// Generation-k ancestor of a cell (k no finer than the cell's own).
    std::size_t ancestor_at(std::size_t id, int k) const;

    nlohmann::json to_json() const;

private:
    friend DMLattice build_lattice(const PointMeasure&, const LatticeParams&);

    PointMeasure sigma_;
    double C0_ = 128.0;
    double A0_ = 256.0;
    int k0_ = 0;
    bool relaxed_A0_ = false;
    bool retried_ = false;
    bool unresolved_duplicates_ = false;
    std::vector<DMCell> cells_;
    std::vector<std::vector<std::size_t>> generations_;
    std::vector<std::vector<std::size_t>> cell_of_;
};

/// Greedy measure-weighted nets, one generation per radius A0^-k, with
/// hierarchy-consistent assignment. Post-construction invariants are
/// checked; one jittered retry, then InvariantViolation.
DMLattice build_lattice(const PointMeasure& sigma, const LatticeParams& params = {});

struct AuditRow {
    std::string check;
    int generation = 0;
    std::size_t tested = 0;
    std::size_t failures = 0;
    /// Smallest slack seen (negative when failing).
    double worst_margin = 0.0;
};

struct LatticeAudit {
    std::vector<AuditRow> rows;
    bool passed() const;
};

/// Partition, nesting, sandwich and 5B-disjointness for every generation.
LatticeAudit audit_lattice(const DMLattice& lat);

struct DoublingReport {
    std::vector<std::size_t> doubling;
    /// Doubling cells violating σ(3 B_Q) <= C0 σ(Q).
    std::vector<std::size_t> violations;
};

DoublingReport doubling_cells(const DMLattice& lat);

/// σ(N_l(Q)) / σ(90 B(Q)) with the boundary neighborhoods at scale A0^-(k+l).
double small_boundary_ratio(const DMLattice& lat, std::size_t q, int l);

struct DoublingCover {
    std::vector<std::size_t> family;
    double uncovered_mass = 0.0;
};

/// Maximal doubling descendants of R (R itself when doubling).
DoublingCover covering_by_doubling(const DMLattice& lat, std::size_t r);

struct ChainDensity {
    double lhs = 0.0;
    double rhs = 0.0;
    double sum_ratio = 0.0;
};

/// Q inside R, every strictly intermediate cell non-doubling.
ChainDensity chain_density_check(const DMLattice& lat, std::size_t q, std::size_t r);

/// Open set given by a signed distance: negative inside, and -sdf is the
/// distance to the complement. -inf means "everything".
using SignedDistance = std::function<double(PointView)>;

struct WhitneyResult {
    std::vector<std::size_t> cells;
    double in_set_mass = 0.0;
    double covered_mass = 0.0;
    bool covers_in_set_atoms = false;
    bool pairwise_disjoint = false;
    /// (i) 10^4 B(Q) inside the open set for every cell.
    bool inside_ok = false;
    std::size_t inside_failures = 0;
    /// (ii) largest witnessing T0 = dist(z_Q, complement) / r(Q).
    double T0 = 0.0;
    bool outside_vacuous = false;
    /// (iii) max number of cells whose 10^4-dilates meet a given one, and
    /// the largest generation gap over meeting pairs.
    std::size_t D0 = 0;
    int max_generation_gap = 0;
    /// (iv) share of the in-set mass carried by doubling cells.
    double doubling_fraction = 0.0;
};

WhitneyResult whitney_decompose(const DMLattice& lat, const SignedDistance& open_set,
                                double whitney_delta);

}  // namespace hmlab
