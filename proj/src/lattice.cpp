#include "hmlab/lattice.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include "hmlab/error.h"

namespace hmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double bbox_diagonal(const PointMeasure& mu) {
    const std::size_t d = static_cast<std::size_t>(mu.dim());
    Point lo(d, kInf), hi(d, -kInf);
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], mu.point(i)[k]);
            hi[k] = std::max(hi[k], mu.point(i)[k]);
        }
    return distance(lo, hi);
}

struct Assignment {
    std::vector<std::size_t> centers;     // atom indices, acceptance order
    std::vector<std::size_t> owner;       // per atom: position in `centers`
};

// One generation of the greedy net. `parent` maps every atom to its cell
// at the previous generation (all zero for the top generation). Returns
// false when some atom has no admissible center within 28 s.
bool assign_generation(const PointMeasure& mu, const BallIndex& index, double s,
                       const std::vector<std::size_t>& parent, bool jitter, Assignment& out) {
    const std::size_t N = mu.size();
    std::vector<double> local_mass(N, 0.0);
    std::vector<char> inside_parent(N, 1);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j : index.query(mu.point(i), s)) {
            local_mass[i] += mu.weight(j);
            if (parent[j] != parent[i]) inside_parent[i] = 0;
        }
    }
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (local_mass[a] != local_mass[b]) return local_mass[a] > local_mass[b];
        if (jitter) return splitmix64(a) < splitmix64(b);
        return a < b;
    });

    std::vector<char> is_center(N, 0);
    out.centers.clear();
    for (std::size_t i : order) {
        if (!inside_parent[i]) continue;
        bool free = true;
        for (std::size_t j : index.query(mu.point(i), 10.0 * s))
            if (is_center[j] && distance(mu.point(i), mu.point(j)) <= 10.0 * s) {
                free = false;
                break;
            }
        if (!free) continue;
        is_center[i] = 1;
        out.centers.push_back(i);
    }

    std::vector<std::size_t> slot(N, 0);
    for (std::size_t c = 0; c < out.centers.size(); ++c) slot[out.centers[c]] = c;
    out.owner.assign(N, 0);
    for (std::size_t i = 0; i < N; ++i) {
        double best = kInf;
        std::size_t best_c = 0;
        for (std::size_t j : index.query(mu.point(i), 28.0 * s)) {
            if (!is_center[j] || parent[j] != parent[i]) continue;
            const double d = distance(mu.point(i), mu.point(j));
            if (d < best) {
                best = d;
                best_c = slot[j];
            }
        }
        if (best == kInf) return false;
        out.owner[i] = best_c;
    }
    return true;
}

}  // namespace

const std::vector<std::size_t>& DMLattice::generation(int k) const {
    if (k < k0_ || k > k_max()) throw Error(ErrorCode::InvalidArgument, "generation out of range");
    return generations_[static_cast<std::size_t>(k - k0_)];
}

std::size_t DMLattice::cell_of(int k, std::size_t i) const {
    if (k < k0_ || k > k_max()) throw Error(ErrorCode::InvalidArgument, "generation out of range");
    return cell_of_[static_cast<std::size_t>(k - k0_)][i];
}

double DMLattice::side_length(int k) const { return 56.0 * C0_ * std::pow(A0_, -k); }

double DMLattice::theta(const DMCell& q) const {
    return q.mass / std::pow(side_length(q), sigma_.n());
}

bool DMLattice::is_ancestor(std::size_t ancestor, std::size_t descendant) const {
    std::optional<std::size_t> c = descendant;
    while (c) {
        if (*c == ancestor) return true;
        if (cells_[*c].generation <= cells_[ancestor].generation) return false;
        c = cells_[*c].parent;
    }
    return false;
}

std::size_t DMLattice::ancestor_at(std::size_t id, int k) const {
    if (k > cells_[id].generation) throw Error(ErrorCode::InvalidArgument, "ancestor must be coarser");
    while (cells_[id].generation > k) id = *cells_[id].parent;
    return id;
}

nlohmann::json DMLattice::to_json() const {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t id = 0; id < cells_.size(); ++id) {
        const DMCell& c = cells_[id];
        cells.push_back({{"id", id},
                         {"generation", c.generation},
                         {"center", c.center},
                         {"radius", c.radius},
                         {"parent", c.parent ? nlohmann::json(*c.parent) : nlohmann::json(nullptr)},
                         {"members", c.members},
                         {"doubling", c.doubling}});
    }
    return {{"C0", C0_}, {"A0", A0_}, {"k0", k0_}, {"k_max", k_max()},
            {"relaxed_A0", relaxed_A0_}, {"cells", cells}};
}

DMLattice build_lattice(const PointMeasure& sigma, const LatticeParams& params) {
    if (sigma.empty()) throw Error(ErrorCode::InvalidArgument, "lattice needs a nonempty support");
    if (!(params.C0 > 1.0)) throw Error(ErrorCode::InvalidArgument, "C0 must exceed 1");

    DMLattice lat;
    lat.sigma_ = sigma;
    lat.C0_ = params.C0;
    const double diam = bbox_diagonal(sigma);
    const double res = resolution_scale(sigma);

    auto top_generation = [&](double A0) {
        return diam > 0.0 ? static_cast<int>(std::floor(-std::log(diam) / std::log(A0))) : 0;
    };
    if (params.A0) {
        lat.A0_ = *params.A0;
    } else {
        const double big = 1e4;
        int resolved = 0;
        if (std::isfinite(res))
            for (int k = top_generation(big); std::pow(big, -k) >= res; ++k) ++resolved;
        lat.A0_ = resolved >= 3 ? big : std::max(64.0, 2.0 * params.C0);
    }
    if (!(lat.A0_ > 1.0)) throw Error(ErrorCode::InvalidArgument, "A0 must exceed 1");
    lat.relaxed_A0_ = !(lat.A0_ > 5000.0 * lat.C0_);
    lat.k0_ = params.k0.value_or(top_generation(lat.A0_));
    if (params.k_max && *params.k_max < lat.k0_)
        throw Error(ErrorCode::InvalidArgument, "k_max below k0");

    const std::size_t N = sigma.size();
    // Automatic depth gives up once the radius is far below every positive
    // distance; only coincident atoms can still share a cell then.
    const double floor_scale = std::isfinite(res) ? res * 1e-9 : 0.0;

    for (int attempt = 0; attempt < 2; ++attempt) {
        const bool jitter = attempt == 1;
        lat.cells_.clear();
        lat.generations_.clear();
        lat.cell_of_.clear();
        lat.unresolved_duplicates_ = false;
        std::vector<std::size_t> parent_cell(N, 0);  // virtual root above k0
        bool failed = false;

        for (int k = lat.k0_;; ++k) {
            const double s = std::pow(lat.A0_, -k);
            const BallIndex index(sigma, s);
            Assignment a;
            if (!assign_generation(sigma, index, s, parent_cell, jitter, a)) {
                failed = true;
                break;
            }
            const std::size_t first = lat.cells_.size();
            std::vector<std::size_t> ids;
            for (std::size_t c = 0; c < a.centers.size(); ++c) {
                DMCell cell;
                cell.generation = k;
                cell.center_index = a.centers[c];
                const PointView z = sigma.point(a.centers[c]);
                cell.center.assign(z.begin(), z.end());
                cell.radius = s;
                if (k > lat.k0_) cell.parent = parent_cell[a.centers[c]];
                ids.push_back(lat.cells_.size());
                lat.cells_.push_back(std::move(cell));
            }
            std::vector<std::size_t> owner(N);
            for (std::size_t i = 0; i < N; ++i) {
                owner[i] = first + a.owner[i];
                lat.cells_[owner[i]].members.push_back(i);
                lat.cells_[owner[i]].mass += sigma.weight(i);
            }
            for (std::size_t id : ids)
                if (lat.cells_[id].parent) lat.cells_[*lat.cells_[id].parent].children.push_back(id);
            for (std::size_t id : ids) {
                DMCell& c = lat.cells_[id];
                c.doubling = mass(sigma, c.ball().scaled(100.0)) <= lat.C0_ * index.mass(c.center, s);
            }
            lat.generations_.push_back(ids);
            lat.cell_of_.push_back(owner);
            parent_cell = owner;

            if (params.k_max) {
                if (k >= *params.k_max) break;
                continue;
            }
            const bool singletons = std::all_of(ids.begin(), ids.end(), [&](std::size_t id) {
                return lat.cells_[id].members.size() == 1;
            });
            if (singletons) break;
            if (s < floor_scale) {
                lat.unresolved_duplicates_ = true;
                break;
            }
        }
        if (!failed && audit_lattice(lat).passed()) {
            lat.retried_ = jitter;
            return lat;
        }
    }
    throw Error(ErrorCode::InvariantViolation,
                "lattice invariants fail after jittered retry (A0=" + std::to_string(lat.A0_) + ")");
}

bool LatticeAudit::passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const AuditRow& r) { return r.failures == 0; });
}

LatticeAudit audit_lattice(const DMLattice& lat) {
    LatticeAudit audit;
    const PointMeasure& sigma = lat.measure();
    const std::size_t N = sigma.size();
    for (int k = lat.k0(); k <= lat.k_max(); ++k) {
        const auto& ids = lat.generation(k);
        const double s = std::pow(lat.A0(), -k);

        AuditRow partition{"partition", k, N, 0, 0.0};
        std::vector<int> seen(N, 0);
        for (std::size_t id : ids)
            for (std::size_t i : lat.cell(id).members) ++seen[i];
        for (std::size_t i = 0; i < N; ++i)
            if (seen[i] != 1 || lat.cell(lat.cell_of(k, i)).generation != k) {
                ++partition.failures;
                partition.worst_margin = -1.0;
            }
        audit.rows.push_back(partition);

        AuditRow nesting{"nesting", k, ids.size(), 0, 0.0};
        for (std::size_t id : ids) {
            const DMCell& c = lat.cell(id);
            if (k > lat.k0()) {
                const bool linked = c.parent && lat.cell(*c.parent).generation == k - 1 &&
                                    std::count(lat.cell(*c.parent).children.begin(),
                                               lat.cell(*c.parent).children.end(), id) == 1;
                bool contained = linked;
                for (std::size_t i : c.members)
                    if (!linked || lat.cell_of(k - 1, i) != *c.parent) contained = false;
                if (!contained) ++nesting.failures;
            }
            if (k < lat.k_max()) {
                std::vector<std::size_t> joined;
                for (std::size_t ch : c.children)
                    joined.insert(joined.end(), lat.cell(ch).members.begin(), lat.cell(ch).members.end());
                std::sort(joined.begin(), joined.end());
                if (joined != c.members) ++nesting.failures;
            }
        }
        if (nesting.failures) nesting.worst_margin = -1.0;
        audit.rows.push_back(nesting);

        const BallIndex index(sigma, s);
        AuditRow outer{"sandwich_outer", k, N, 0, kInf};
        AuditRow inner{"sandwich_inner", k, 0, 0, kInf};
        for (std::size_t id : ids) {
            const DMCell& c = lat.cell(id);
            for (std::size_t i : c.members) {
                const double m = 28.0 * c.radius - distance(c.center, sigma.point(i));
                outer.worst_margin = std::min(outer.worst_margin, m);
                if (m < 0.0) ++outer.failures;
            }
            for (std::size_t i : index.query(c.center, c.radius)) {
                ++inner.tested;
                if (lat.cell_of(k, i) != id) {
                    ++inner.failures;
                    inner.worst_margin = std::min(inner.worst_margin,
                                                  distance(c.center, sigma.point(i)) - c.radius);
                }
            }
        }
        if (outer.worst_margin == kInf) outer.worst_margin = 0.0;
        if (inner.worst_margin == kInf) inner.worst_margin = 0.0;
        audit.rows.push_back(outer);
        audit.rows.push_back(inner);

        // Margins beyond 10 s are capped: only near pairs can fail.
        AuditRow disjoint{"5B_disjoint", k, 0, 0, 10.0 * s};
        std::vector<char> is_center(N, 0);
        std::vector<std::size_t> cell_at(N, 0);
        for (std::size_t id : ids) {
            is_center[lat.cell(id).center_index] = 1;
            cell_at[lat.cell(id).center_index] = id;
        }
        for (std::size_t id : ids) {
            const DMCell& c = lat.cell(id);
            for (std::size_t j : index.query(c.center, 20.0 * s)) {
                if (!is_center[j] || j <= c.center_index) continue;
                const DMCell& o = lat.cell(cell_at[j]);
                ++disjoint.tested;
                const double m = distance(c.center, o.center) - 5.0 * c.radius - 5.0 * o.radius;
                disjoint.worst_margin = std::min(disjoint.worst_margin, m);
                if (!(m > 0.0)) ++disjoint.failures;
            }
        }
        audit.rows.push_back(disjoint);
    }
    return audit;
}

DoublingReport doubling_cells(const DMLattice& lat) {
    DoublingReport rep;
    for (std::size_t id = 0; id < lat.cells().size(); ++id) {
        const DMCell& c = lat.cell(id);
        if (!c.doubling) continue;
        rep.doubling.push_back(id);
        if (mass(lat.measure(), c.ball().scaled(84.0)) > lat.C0() * c.mass) rep.violations.push_back(id);
    }
    return rep;
}

double small_boundary_ratio(const DMLattice& lat, std::size_t q, int l) {
    if (l < 0) throw Error(ErrorCode::InvalidArgument, "l must be >= 0");
    const PointMeasure& sigma = lat.measure();
    const DMCell& c = lat.cell(q);
    const double t = std::pow(lat.A0(), -(c.generation + l));
    const double denom = mass(sigma, c.ball().scaled(90.0));
    if (denom <= 0.0) return 0.0;

    std::vector<char> in_q(sigma.size(), 0);
    for (std::size_t i : c.members) in_q[i] = 1;
    // Both neighborhoods live within 28 r + t of the center.
    const Ball reach{c.center, 28.0 * c.radius + t};
    const std::vector<std::size_t> near = members(sigma, reach);
    std::vector<std::size_t> inside, outside;
    for (std::size_t i : near) (in_q[i] ? inside : outside).push_back(i);

    double s = 0.0;
    for (std::size_t i : outside)
        for (std::size_t j : inside)
            if (distance(sigma.point(i), sigma.point(j)) < t) {
                s += sigma.weight(i);
                break;
            }
    for (std::size_t i : inside)
        for (std::size_t j : outside)
            if (distance(sigma.point(i), sigma.point(j)) < t) {
                s += sigma.weight(i);
                break;
            }
    return s / denom;
}

DoublingCover covering_by_doubling(const DMLattice& lat, std::size_t r) {
    DoublingCover out;
    std::vector<std::size_t> stack{r};
    while (!stack.empty()) {
        const std::size_t id = stack.back();
        stack.pop_back();
        const DMCell& c = lat.cell(id);
        if (c.doubling) {
            out.family.push_back(id);
        } else if (c.children.empty()) {
            out.uncovered_mass += c.mass;
        } else {
            for (auto it = c.children.rbegin(); it != c.children.rend(); ++it) stack.push_back(*it);
        }
    }
    return out;
}

ChainDensity chain_density_check(const DMLattice& lat, std::size_t q, std::size_t r) {
    if (!lat.is_ancestor(r, q)) throw Error(ErrorCode::InvalidArgument, "Q must lie inside R");
    const PointMeasure& sigma = lat.measure();
    const int n = sigma.n();
    auto theta100 = [&](const DMCell& c) {
        return mass(sigma, c.ball().scaled(100.0)) / std::pow(200.0 * c.radius, n);
    };
    double sum = 0.0;
    for (std::size_t id = q;; id = *lat.cell(id).parent) {
        if (id != q && id != r && lat.cell(id).doubling)
            throw Error(ErrorCode::ChainNotNonDoubling,
                        "intermediate cell " + std::to_string(id) + " is doubling");
        sum += theta100(lat.cell(id));
        if (id == r) break;
    }
    const DMCell& Q = lat.cell(q);
    const DMCell& R = lat.cell(r);
    ChainDensity out;
    out.lhs = mass(sigma, Q.ball().scaled(100.0));
    out.rhs = std::pow(lat.A0(), -10.0 * n * (Q.generation - R.generation - 1)) *
              mass(sigma, R.ball().scaled(100.0));
    const double base = theta100(R);
    out.sum_ratio = base > 0.0 ? sum / base : 0.0;
    return out;
}

WhitneyResult whitney_decompose(const DMLattice& lat, const SignedDistance& open_set,
                                double whitney_delta) {
    if (!(whitney_delta > 0.0 && whitney_delta < 0.01))
        throw Error(ErrorCode::InvalidArgument, "whitney_delta must lie in (0, 1/100)");
    const PointMeasure& sigma = lat.measure();
    WhitneyResult out;

    std::set<std::size_t> candidates;
    std::vector<char> in_set(sigma.size(), 0);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        const double sd = open_set(sigma.point(i));
        if (!(sd < 0.0)) continue;
        in_set[i] = 1;
        out.in_set_mass += sigma.weight(i);
        const double dist = -sd;
        int k = lat.k0();
        while (k <= lat.k_max() && !(lat.side_length(k) <= whitney_delta * dist)) ++k;
        if (k > lat.k_max())
            throw Error(ErrorCode::NoCellSmallEnough,
                        "atom " + std::to_string(i) + " needs a generation beyond k_max");
        candidates.insert(lat.cell_of(k, i));
    }
    if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "open set misses the support");

    for (std::size_t id : candidates) {
        bool maximal = true;
        for (auto p = lat.cell(id).parent; p; p = lat.cell(*p).parent)
            if (candidates.count(*p)) {
                maximal = false;
                break;
            }
        if (maximal) out.cells.push_back(id);
    }

    std::vector<int> hits(sigma.size(), 0);
    double doubling_mass = 0.0;
    out.inside_ok = true;
    out.T0 = 0.0;
    for (std::size_t id : out.cells) {
        const DMCell& c = lat.cell(id);
        for (std::size_t i : c.members) ++hits[i];
        out.covered_mass += c.mass;
        if (c.doubling) doubling_mass += c.mass;
        const double depth = -open_set(c.center);
        if (!(1e4 * c.radius < depth)) {
            out.inside_ok = false;
            ++out.inside_failures;
        }
        if (std::isinf(depth))
            out.outside_vacuous = true;
        else
            out.T0 = std::max(out.T0, depth / c.radius);
    }
    out.pairwise_disjoint = std::all_of(hits.begin(), hits.end(), [](int h) { return h <= 1; });
    out.covers_in_set_atoms = true;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if ((hits[i] > 0) != (in_set[i] != 0)) out.covers_in_set_atoms = false;
    out.doubling_fraction = out.in_set_mass > 0.0 ? doubling_mass / out.in_set_mass : 0.0;

    for (std::size_t a = 0; a < out.cells.size(); ++a) {
        const DMCell& ca = lat.cell(out.cells[a]);
        std::size_t meets = 0;
        for (std::size_t b = 0; b < out.cells.size(); ++b) {
            const DMCell& cb = lat.cell(out.cells[b]);
            if (distance(ca.center, cb.center) > 1e4 * (ca.radius + cb.radius)) continue;
            ++meets;
            out.max_generation_gap = std::max(out.max_generation_gap, std::abs(ca.generation - cb.generation));
        }
        out.D0 = std::max(out.D0, meets);
    }
    return out;
}

}  // namespace hmlab
