#include <doctest.h>

#include <cmath>
#include <set>

#include "hmlab/error.h"
#include "hmlab/lattice.h"

using namespace hmlab;

namespace {

double dist(PointView a, PointView b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

// Independent brute-force audit of partition, nesting, sandwich and
// 5B-disjointness. Returns the number of violations.
int brute_audit(const DMLattice& lat) {
    const PointMeasure& s = lat.measure();
    int bad = 0;
    for (int k = lat.k0(); k <= lat.k_max(); ++k) {
        std::vector<int> count(s.size(), 0);
        const auto& ids = lat.generation(k);
        for (std::size_t id : ids) {
            const DMCell& c = lat.cell(id);
            for (std::size_t i : c.members) {
                ++count[i];
                if (dist(s.point(i), c.center) > 28.0 * c.radius) ++bad;
            }
            std::set<std::size_t> mem(c.members.begin(), c.members.end());
            for (std::size_t i = 0; i < s.size(); ++i)
                if (dist(s.point(i), c.center) <= c.radius && !mem.count(i)) ++bad;
            if (k > lat.k0()) {
                const DMCell& p = lat.cell(*c.parent);
                std::set<std::size_t> pm(p.members.begin(), p.members.end());
                for (std::size_t i : c.members)
                    if (!pm.count(i)) ++bad;
            }
            if (k < lat.k_max()) {
                std::multiset<std::size_t> joined;
                for (std::size_t ch : c.children)
                    for (std::size_t i : lat.cell(ch).members) joined.insert(i);
                if (joined != std::multiset<std::size_t>(c.members.begin(), c.members.end())) ++bad;
            }
        }
        for (int c : count)
            if (c != 1) ++bad;
        for (std::size_t a = 0; a < ids.size(); ++a)
            for (std::size_t b = a + 1; b < ids.size(); ++b) {
                const DMCell& x = lat.cell(ids[a]);
                const DMCell& y = lat.cell(ids[b]);
                if (!(dist(x.center, y.center) > 5.0 * x.radius + 5.0 * y.radius)) ++bad;
            }
    }
    return bad;
}

double brute_mass(const PointMeasure& s, const Point& c, double r) {
    double m = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (dist(s.point(i), c) <= r) m += s.weight(i);
    return m;
}

PointMeasure single_atom() {
    PointMeasure mu(2, 1);
    mu.add(Point{0.3, 0.4}, 1.0);
    return mu;
}

}  // namespace

TEST_CASE("single atom lattice is a chain") {
    LatticeParams p;
    p.k_max = 3;
    p.A0 = 256;
    const DMLattice lat = build_lattice(single_atom(), p);
    CHECK(lat.generation_count() == static_cast<std::size_t>(3 - lat.k0() + 1));
    for (int k = lat.k0(); k <= lat.k_max(); ++k) {
        REQUIRE(lat.generation(k).size() == 1);
        CHECK(lat.cell(lat.generation(k)[0]).doubling);
    }
    CHECK(brute_audit(lat) == 0);
    CHECK(audit_lattice(lat).passed());
}

TEST_CASE("unit square corners resolve into singletons") {
    PointMeasure mu(2, 1);
    for (Point p : {Point{0, 0}, Point{1, 0}, Point{0, 1}, Point{1, 1}}) mu.add(p, 1.0);
    LatticeParams p;
    p.A0 = 10;
    const DMLattice lat = build_lattice(mu, p);
    CHECK(lat.relaxed_A0());
    const auto& last = lat.generation(lat.k_max());
    CHECK(last.size() == 4);
    for (std::size_t id : last) CHECK(lat.cell(id).members.size() == 1);
    CHECK(brute_audit(lat) == 0);
    CHECK(audit_lattice(lat).passed());
}

TEST_CASE("segment lattice invariants") {
    const PointMeasure seg = generators::unit_segment(1000);
    const DMLattice lat = build_lattice(seg);
    CHECK(lat.A0() == 256.0);
    CHECK(lat.relaxed_A0());
    CHECK(brute_audit(lat) == 0);
    CHECK(audit_lattice(lat).passed());
    for (std::size_t id : lat.generation(lat.k_max())) CHECK(lat.cell(id).members.size() == 1);
}

TEST_CASE("other generators satisfy the invariants") {
    for (const PointMeasure& mu :
         {generators::circle(300, {0, 0}, 1.0), generators::square_boundary(400),
          generators::two_cluster(200, 0.01, 1.0), generators::segment_plus_cluster(400, 40, 0.01, 0.5),
          generators::sphere_shell(300, 1.0)}) {
        const DMLattice lat = build_lattice(mu);
        CHECK(brute_audit(lat) == 0);
    }
}

TEST_CASE("doubling cells") {
    LatticeParams p;
    p.k_max = 2;
    for (std::size_t id = 0; id < build_lattice(single_atom(), p).cells().size(); ++id)
        CHECK(build_lattice(single_atom(), p).cell(id).doubling);

    // Clusters of equal mass: at the cluster scale 100B(Q) swallows the
    // other cluster, doubling the mass.
    const PointMeasure tc = generators::two_cluster(40, 0.01, 1.0);
    LatticeParams q;
    q.A0 = 20;
    q.C0 = 1.5;
    const DMLattice lat = build_lattice(tc, q);
    bool saw_cluster_scale = false;
    for (const DMCell& c : lat.cells()) {
        const double ratio = brute_mass(tc, c.center, 100 * c.radius) / brute_mass(tc, c.center, c.radius);
        CHECK(c.doubling == (ratio <= 1.5));
        if (c.radius == 0.05) {
            saw_cluster_scale = true;
            CHECK(!c.doubling);
        }
    }
    CHECK(saw_cluster_scale);

    const PointMeasure seg = generators::unit_segment(1000);
    const DMLattice sl = build_lattice(seg);
    for (const DMCell& c : sl.cells()) {
        const double x = c.center[0];
        if (x - 100 * c.radius > 0.0 && x + 100 * c.radius < 1.0) CHECK(c.doubling);
    }
    const DoublingReport rep = doubling_cells(sl);
    CHECK(!rep.doubling.empty());
    for (std::size_t id : rep.violations)
        CHECK(brute_mass(seg, sl.cell(id).center, 84 * sl.cell(id).radius) > 128 * sl.cell(id).mass);
}

TEST_CASE("small boundary ratio") {
    const PointMeasure seg = generators::unit_segment(1000);
    const DMLattice lat = build_lattice(seg);
    for (std::size_t id = 0; id < lat.cells().size(); ++id) CHECK(small_boundary_ratio(lat, id, 0) <= 1.0);

    const std::size_t last = lat.generation(lat.k_max())[500];
    CHECK(small_boundary_ratio(lat, last, 3) == 0.0);

    // Interior generation-1 cell, l = 1: direct count of atoms within
    // A0^-2 of the other side.
    const auto& g1 = lat.generation(lat.k0() + 1);
    std::size_t mid = g1[0];
    for (std::size_t id : g1)
        if (std::abs(lat.cell(id).center[0] - 0.5) < std::abs(lat.cell(mid).center[0] - 0.5)) mid = id;
    const DMCell& c = lat.cell(mid);
    const double t = std::pow(lat.A0(), -(c.generation + 1));
    std::set<std::size_t> in(c.members.begin(), c.members.end());
    double shell = 0.0;
    for (std::size_t i = 0; i < seg.size(); ++i) {
        double nearest_other = 1e300;
        for (std::size_t j = 0; j < seg.size(); ++j)
            if (in.count(i) != in.count(j)) nearest_other = std::min(nearest_other, dist(seg.point(i), seg.point(j)));
        if (nearest_other < t) shell += seg.weight(i);
    }
    const double expected = shell / brute_mass(seg, c.center, 90 * c.radius);
    CHECK(small_boundary_ratio(lat, mid, 1) == doctest::Approx(expected));
}

TEST_CASE("covering by doubling cells") {
    const PointMeasure seg = generators::unit_segment(1000);
    const DMLattice lat = build_lattice(seg);
    const std::size_t root = lat.generation(lat.k0())[0];
    CHECK(lat.cell(root).doubling);
    const DoublingCover top = covering_by_doubling(lat, root);
    CHECK(top.family == std::vector<std::size_t>{root});
    CHECK(top.uncovered_mass == 0.0);
    for (std::size_t id : lat.generation(lat.k0() + 1)) CHECK(covering_by_doubling(lat, id).uncovered_mass == 0.0);

    // Adversarial clusters: brute force over ancestor chains.
    const PointMeasure tc = generators::two_cluster(40, 0.01, 1.0);
    LatticeParams q;
    q.A0 = 20;
    q.C0 = 1.5;
    q.k_max = 1;
    const DMLattice tl = build_lattice(tc, q);
    const std::size_t r = tl.generation(tl.k0())[0];
    double expected = 0.0;
    for (std::size_t i = 0; i < tc.size(); ++i) {
        bool any = false;
        for (int k = tl.k0(); k <= tl.k_max(); ++k) any = any || tl.cell(tl.cell_of(k, i)).doubling;
        if (!any) expected += tc.weight(i);
    }
    CHECK(covering_by_doubling(tl, r).uncovered_mass == doctest::Approx(expected));
}

TEST_CASE("chain density check") {
    const PointMeasure seg = generators::unit_segment(1000);
    const DMLattice lat = build_lattice(seg);
    const std::size_t root = lat.generation(lat.k0())[0];
    CHECK(chain_density_check(lat, root, root).sum_ratio == doctest::Approx(1.0));

    LatticeParams p;
    p.k_max = 3;
    const DMLattice one = build_lattice(single_atom(), p);
    const std::size_t leaf = one.generation(one.k_max())[0];
    CHECK_THROWS_AS(chain_density_check(one, leaf, one.generation(one.k0())[0]), Error);

    // A non-doubling chain on clusters; compare both sides with direct counts.
    const PointMeasure tc = generators::two_cluster(40, 0.01, 1.0);
    LatticeParams q;
    q.A0 = 20;
    q.C0 = 1.5;
    const DMLattice tl = build_lattice(tc, q);
    for (std::size_t id = 0; id < tl.cells().size(); ++id) {
        const DMCell& Q = tl.cell(id);
        if (!Q.parent || !Q.doubling) continue;
        std::size_t R = *Q.parent;
        while (tl.cell(R).parent && !tl.cell(R).doubling) R = *tl.cell(R).parent;
        // Only chains with non-doubling intermediates.
        bool ok = true;
        for (auto s = Q.parent; s && *s != R; s = tl.cell(*s).parent) ok = ok && !tl.cell(*s).doubling;
        if (!ok) continue;
        const ChainDensity cd = chain_density_check(tl, id, R);
        CHECK(cd.lhs == doctest::Approx(brute_mass(tc, Q.center, 100 * Q.radius)));
        const int gap = Q.generation - tl.cell(R).generation;
        CHECK(cd.rhs == doctest::Approx(std::pow(20.0, -10.0 * (gap - 1)) *
                                        brute_mass(tc, tl.cell(R).center, 100 * tl.cell(R).radius)));
        double sum = 0.0;
        for (std::optional<std::size_t> s = id;; s = tl.cell(*s).parent) {
            sum += brute_mass(tc, tl.cell(*s).center, 100 * tl.cell(*s).radius) / (200 * tl.cell(*s).radius);
            if (*s == R) break;
        }
        const double base = brute_mass(tc, tl.cell(R).center, 100 * tl.cell(R).radius) / (200 * tl.cell(R).radius);
        CHECK(cd.sum_ratio == doctest::Approx(sum / base));
    }
}

TEST_CASE("whitney decomposition of a ball on the segment") {
    const PointMeasure seg = generators::unit_segment(1000);
    LatticeParams p;
    p.k_max = 4;
    const DMLattice lat = build_lattice(seg, p);
    const Point c{0.5, 0.0};
    const SignedDistance ball = [&](PointView x) { return dist(x, c) - 0.3; };
    const WhitneyResult w = whitney_decompose(lat, ball, 0.005);
    CHECK(w.pairwise_disjoint);
    CHECK(w.covers_in_set_atoms);
    CHECK(w.covered_mass == doctest::Approx(w.in_set_mass));
    CHECK(w.inside_ok);
    CHECK(std::isfinite(w.T0));
    CHECK(w.max_generation_gap <= 1);
    CHECK(w.doubling_fraction >= 0.5);

    // Brute force: union of cells equals the in-set atoms.
    std::set<std::size_t> covered;
    for (std::size_t id : w.cells)
        for (std::size_t i : lat.cell(id).members) CHECK(covered.insert(i).second);
    for (std::size_t i = 0; i < seg.size(); ++i) CHECK((covered.count(i) == 1) == (dist(seg.point(i), c) < 0.3));

    LatticeParams shallow;
    shallow.k_max = 1;
    CHECK_THROWS_AS(whitney_decompose(build_lattice(seg, shallow), ball, 0.005), Error);
}

TEST_CASE("whitney degenerate cases") {
    const PointMeasure seg = generators::unit_segment(1000);
    LatticeParams p;
    p.k_max = 4;
    const DMLattice lat = build_lattice(seg, p);
    const WhitneyResult all =
        whitney_decompose(lat, [](PointView) { return -std::numeric_limits<double>::infinity(); }, 0.005);
    CHECK(all.outside_vacuous);
    CHECK(all.cells == std::vector<std::size_t>{lat.generation(lat.k0())[0]});

    // A tiny ball around a single atom.
    const Point a(seg.point(300).begin(), seg.point(300).end());
    const WhitneyResult one = whitney_decompose(lat, [&](PointView x) { return dist(x, a) - 9e-4; }, 0.005);
    REQUIRE(one.cells.size() == 1);
    CHECK(lat.cell(one.cells[0]).members == std::vector<std::size_t>{300});
    CHECK(one.inside_ok);
    CHECK(1e4 * lat.cell(one.cells[0]).radius < 9e-4);
    CHECK(one.T0 == doctest::Approx(9e-4 / lat.cell(one.cells[0]).radius));
}
