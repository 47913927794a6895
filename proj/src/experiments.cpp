#include "hmlab/experiments.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>

#include "hmlab/corona.h"
#include "hmlab/domain.h"
#include "hmlab/error.h"
#include "hmlab/harmonic.h"
#include "hmlab/lattice.h"
#include "hmlab/random.h"
#include "hmlab/riesz.h"
#include "hmlab/walk.h"

namespace hmlab {

namespace {

using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Point point_of(const Config& cfg, const std::string& key) {
    const std::vector<double> v = cfg.list(key);
    return Point(v.begin(), v.end());
}

Ball ball_of(const Config& cfg) { return Ball{point_of(cfg, "ball_center"), cfg.num("ball_radius")}; }

Sampling sampling_of(const ExitDistribution& ex) {
    return Sampling{ex.walk_count, ex.seed, ex.shell_eps, ex.discard_fraction()};
}

Sampling sampling_of(std::size_t N, std::uint64_t seed, const WalkParams& w) {
    return Sampling{N, seed, w.shell_eps, 0.0};
}

/// Walks [lo, hi) of a distribution as a distribution of their own.
ExitDistribution slice(const ExitDistribution& ex, std::size_t lo, std::size_t hi) {
    ExitDistribution out;
    out.dim = ex.dim;
    out.pole = ex.pole;
    out.seed = ex.seed;
    out.shell_eps = ex.shell_eps;
    out.walk_count = hi - lo;
    const auto d = static_cast<std::size_t>(ex.dim);
    out.exits.assign(ex.exits.begin() + static_cast<std::ptrdiff_t>(lo * d),
                     ex.exits.begin() + static_cast<std::ptrdiff_t>(hi * d));
    out.sides.assign(ex.sides.begin() + static_cast<std::ptrdiff_t>(lo), ex.sides.begin() + static_cast<std::ptrdiff_t>(hi));
    out.kept.assign(ex.kept.begin() + static_cast<std::ptrdiff_t>(lo), ex.kept.begin() + static_cast<std::ptrdiff_t>(hi));
    for (char k : out.kept) out.discarded += k ? 0 : 1;
    return out;
}

std::array<ExitDistribution, 2> halves(const ExitDistribution& ex) {
    const std::size_t h = ex.walk_count / 2;
    return {slice(ex, 0, h), slice(ex, h, 2 * h)};
}

/// Standard error of a statistic from its values on two independent
/// half-size samples: each half has twice the variance of the full run.
double split_stderr(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) return kNaN;
    return std::abs(a - b) / 2.0;
}

using Stats = std::map<std::string, double>;

/// Full-sample statistics with split-half errors, written under `prefix`.
void report_stats(Report& rep, const std::string& prefix, const Stats& full, const Stats* h0, const Stats* h1,
                  const Sampling& s) {
    for (const auto& [key, v] : full) {
        double se = kNaN;
        if (h0 && h1 && h0->count(key) && h1->count(key)) se = split_stderr(h0->at(key), h1->at(key));
        rep.stochastic(prefix.empty() ? key : prefix + "/" + key, v, se, s);
    }
}

std::size_t pick_root(const DMLattice& lat) {
    const auto& top = lat.generation(lat.k0());
    std::optional<std::size_t> best;
    for (std::size_t id : top) {
        const DMCell& c = lat.cell(id);
        const bool better = !best || (c.doubling && !lat.cell(*best).doubling) ||
                            (c.doubling == lat.cell(*best).doubling && c.mass > lat.cell(*best).mass);
        if (better) best = id;
    }
    return *best;
}

json ball_json(const Ball& b) { return json{{"center", b.center}, {"radius", b.radius}}; }

class Context {
public:
    Context(const Config& c, Report& r) : cfg(c), rep(r), seed(c.seed()), walk(c.walk()) {}

    const Config& cfg;
    Report& rep;
    std::uint64_t seed;
    WalkParams walk;

    DMLattice lattice(const PointMeasure& m, const LatticeParams& p, const std::string& label) {
        DMLattice lat = build_lattice(m, p);
        rep.value("lattices/" + label, json{{"A0", lat.A0()},
                                            {"C0", lat.C0()},
                                            {"k0", lat.k0()},
                                            {"k_max", lat.k_max()},
                                            {"cells", lat.cells().size()},
                                            {"atoms", m.size()},
                                            {"relaxed_A0", lat.relaxed_A0()},
                                            {"retried", lat.retried()},
                                            {"unresolved_duplicates", lat.unresolved_duplicates()}});
        if (lat.relaxed_A0()) rep.flag("relaxed_A0:" + label, true, "A0 below 5000 C0");
        if (cfg.flag("lattice_audit")) record_audit(label, audit_lattice(lat));
        return lat;
    }

    void record_audit(const std::string& label, const LatticeAudit& audit) {
        if (!audit_)
            audit_ = &rep.table("lattice_audit.csv",
                                {"lattice", "check", "generation", "tested", "failures", "worst_margin"});
        std::size_t failures = 0;
        for (const AuditRow& r : audit.rows) {
            *audit_ << label << r.check << r.generation << r.tested << r.failures << r.worst_margin;
            audit_->end_row();
            failures += r.failures;
        }
        rep.check("lattice_invariants:" + label, static_cast<double>(failures), 0.0, audit.passed());
    }

    ExitDistribution exits(const Domain& dom, PointView pole, std::size_t N, std::uint64_t s,
                           const std::string& label, const Targets* targets = nullptr) {
        ExitDistribution ex = sample_exits(dom, pole, N, s, walk);
        if (cfg.flag("export_exits")) {
            std::ostringstream os;
            write_exits_csv(os, ex, targets ? target_ids(ex, *targets) : std::vector<int>(ex.walk_count, -1));
            rep.text_file("exits_" + label + ".csv", os.str());
        }
        return ex;
    }

private:
    CsvWriter* audit_ = nullptr;
};

Domain domain_of(const Config& cfg) { return builtin_domain(cfg.str("domain"), cfg.num("domain_param")); }

// ---------------------------------------------------------------- lattice-audit

void run_lattice_audit(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const PointMeasure mu = cfg.measure();
    rep.value("measure", json{{"atoms", mu.size()}, {"dim", mu.dim()}, {"n", mu.n()}, {"mass", mu.total_mass()}});
    const DMLattice lat = ctx.lattice(mu, cfg.lattice(), "mu");
    if (!cfg.flag("lattice_audit")) ctx.record_audit("mu", audit_lattice(lat));

    const DoublingReport dbl = doubling_cells(lat);
    rep.value("doubling/cells", dbl.doubling.size());
    rep.value("doubling/violations", dbl.violations.size());
    rep.check("doubling_cells:3B_bound", static_cast<double>(dbl.violations.size()), 0.0, dbl.violations.empty());

    // Small-boundary decay: raw ratios per generation and depth l.
    CsvWriter& sb = rep.table("small_boundary.csv", {"generation", "l", "cells", "max_ratio", "mean_ratio"});
    std::map<int, std::pair<double, std::size_t>> by_l;
    for (int k = lat.k0(); k < lat.k_max(); ++k) {
        const auto& ids = lat.generation(k);
        const std::size_t stride = std::max<std::size_t>(1, ids.size() / 64);
        for (int l = 1; l <= std::min(3, lat.k_max() - k); ++l) {
            double mx = 0.0, sum = 0.0;
            std::size_t count = 0;
            for (std::size_t j = 0; j < ids.size(); j += stride) {
                const double r = small_boundary_ratio(lat, ids[j], l);
                mx = std::max(mx, r);
                sum += r;
                ++count;
            }
            sb << k << l << count << mx << sum / static_cast<double>(count);
            sb.end_row();
            by_l[l].first += sum;
            by_l[l].second += count;
        }
    }
    for (const auto& [l, acc] : by_l)
        rep.value("small_boundary/mean_ratio_l" + std::to_string(l), acc.first / static_cast<double>(acc.second));
    if (by_l.count(1) && by_l.count(2) && by_l[1].first > 0.0)
        rep.value("small_boundary/decay_per_generation",
                  (by_l[2].first / static_cast<double>(by_l[2].second)) /
                      (by_l[1].first / static_cast<double>(by_l[1].second)));

    const Point wc = point_of(cfg, "whitney_center");
    const double wr = cfg.num("whitney_radius");
    const SignedDistance open_ball = [&](PointView x) { return distance(x, wc) - wr; };
    const WhitneyResult w = whitney_decompose(lat, open_ball, cfg.num("whitney_delta"));
    rep.value("whitney", json{{"open_set", ball_json(Ball{wc, wr})},
                              {"cells", w.cells.size()},
                              {"in_set_mass", w.in_set_mass},
                              {"covered_mass", w.covered_mass},
                              {"inside_failures", w.inside_failures},
                              {"T0", w.T0},
                              {"outside_vacuous", w.outside_vacuous},
                              {"D0", w.D0},
                              {"max_generation_gap", w.max_generation_gap},
                              {"doubling_fraction", w.doubling_fraction}});
    rep.check("whitney:inside", static_cast<double>(w.inside_failures), 0.0, w.inside_ok);
    rep.check("whitney:partition", w.covered_mass, w.in_set_mass, w.covers_in_set_atoms && w.pairwise_disjoint);
    rep.check("whitney:T0_finite", w.T0, std::numeric_limits<double>::infinity(), std::isfinite(w.T0));
    rep.check("whitney:generation_gap", w.max_generation_gap, 1.0, w.max_generation_gap <= 1);
    rep.check("whitney:doubling_fraction", w.doubling_fraction, 0.5, w.doubling_fraction >= 0.5);
    CsvWriter& wt = rep.table("whitney.csv", {"cell", "generation", "radius", "mass", "doubling"});
    for (std::size_t id : w.cells) {
        const DMCell& c = lat.cell(id);
        wt << id << c.generation << c.radius << c.mass << c.doubling;
        wt.end_row();
    }
    rep.json_file("lattice.json", lat.to_json());
}

// ---------------------------------------------------------------- wos-validate

/// Harmonic measure CDF of the arc [0, θ] seen from a: the disk
/// automorphism z -> (z - a) / (1 - conj(a) z) pushes ω^a to the uniform law.
double disk_cdf(std::complex<double> a, double theta) {
    auto phi = [&](std::complex<double> z) { return std::arg((z - a) / (1.0 - std::conj(a) * z)); };
    double d = phi(std::polar(1.0, theta)) - phi(1.0);
    d = std::fmod(d, 2.0 * std::numbers::pi);
    if (d < 0.0) d += 2.0 * std::numbers::pi;
    return d / (2.0 * std::numbers::pi);
}

double ks_statistic(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        d = std::max({d, static_cast<double>(i + 1) / n - u[i], u[i] - static_cast<double>(i) / n});
    return d;
}

void run_wos_validate(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const Domain dom = domain_of(cfg);
    const Point pole = point_of(cfg, "pole");
    const auto N = static_cast<std::size_t>(cfg.integer("walks"));
    const bool disk = dom.name() == "disk";
    if (!disk && dom.name() != "square") throw Error(ErrorCode::ConfigError, "wos-validate supports disk and square");

    const auto k = static_cast<std::size_t>(cfg.integer("arcs"));
    const Targets targets = disk ? arc_targets(k) : square_side_targets();
    const ExitDistribution ex = ctx.exits(dom, pole, N, ctx.seed, "pole", &targets);
    const HarmonicMeasure hm = tally(ex, targets);
    const Sampling s = sampling_of(ex);
    rep.value("walks", json{{"N", ex.walk_count}, {"valid", ex.valid()}, {"discarded", ex.discarded}});

    const bool centered = std::all_of(pole.begin(), pole.end(), [](double v) { return v == 0.0; });
    const bool analytic = disk || centered;
    CsvWriter& t = rep.table("pieces.csv", {"piece", "theta0", "theta1", "count", "frequency", "stderr", "expected", "z"});
    double max_z = 0.0, tv = 0.0;
    const double valid = static_cast<double>(hm.valid);
    for (std::size_t j = 0; j < targets.count; ++j) {
        const double th0 = disk ? 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(k) : kNaN;
        const double th1 = disk ? 2.0 * std::numbers::pi * static_cast<double>(j + 1) / static_cast<double>(k) : kNaN;
        const double expected = disk ? disk_poisson_arc(pole, th0, th1) : (centered ? 0.25 : kNaN);
        // Binomial error at the expected value, so an empty piece is not exact.
        const double se = analytic ? std::sqrt(expected * (1.0 - expected) / valid) : hm.stderr_[j];
        const double z = analytic ? (hm.prob[j] - expected) / se : kNaN;
        if (analytic) {
            max_z = std::max(max_z, std::abs(z));
            tv += 0.5 * std::abs(hm.prob[j] - expected);
        }
        t << j << th0 << th1 << hm.counts[j] << hm.prob[j] << hm.stderr_[j] << expected << z;
        t.end_row();
    }
    if (!analytic) return;

    // Split-half errors for the two summary statistics.
    auto stats = [&](const ExitDistribution& e) {
        const HarmonicMeasure h = tally(e, targets);
        double d = 0.0;
        for (std::size_t j = 0; j < targets.count; ++j) {
            const double expected =
                disk ? disk_poisson_arc(pole, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(k),
                                        2.0 * std::numbers::pi * static_cast<double>(j + 1) / static_cast<double>(k))
                     : 0.25;
            d += 0.5 * std::abs(h.prob[j] - expected);
        }
        return d;
    };
    const auto hv = halves(ex);
    rep.stochastic("total_variation", tv, split_stderr(stats(hv[0]), stats(hv[1])), s);
    rep.value("max_abs_z", max_z);
    rep.check("pieces_within_3_stderr", max_z, 3.0, max_z <= 3.0);
    rep.check("total_variation", tv, 0.02, tv < 0.02);

    if (disk) {
        const std::complex<double> a(pole[0], pole[1]);
        auto ks_of = [&](const ExitDistribution& e) {
            std::vector<double> u;
            u.reserve(e.valid());
            for (std::size_t i = 0; i < e.walk_count; ++i) {
                if (!e.kept[i]) continue;
                double th = std::atan2(e.exit(i)[1], e.exit(i)[0]);
                if (th < 0.0) th += 2.0 * std::numbers::pi;
                u.push_back(disk_cdf(a, th));
            }
            return ks_statistic(std::move(u));
        };
        const double ks = ks_of(ex);
        const double crit = 1.358 / std::sqrt(static_cast<double>(ex.valid()));
        rep.stochastic("ks_statistic", ks, split_stderr(ks_of(hv[0]), ks_of(hv[1])), s);
        rep.value("ks_critical_5pct", crit);
        rep.check("ks_below_5pct_critical", ks, crit, ks <= crit);
    }
}

// ---------------------------------------------------------------- green-check

/// Disk Green function averaged over the circle of radius d(x0)/4 about x0.
double disk_rho(const Point& x0) {
    const double r2 = x0[0] * x0[0] + x0[1] * x0[1];
    const double d = 1.0 - std::sqrt(r2);
    return (std::log(1.0 - r2) + std::log(4.0 / d)) / (2.0 * std::numbers::pi);
}

void green_omega_section(Context& ctx, const Domain& dom, const Ball& B, const std::string& prefix,
                         std::uint64_t seed) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const auto N = static_cast<std::size_t>(cfg.integer("walks"));
    const Corkscrew xb =
        corkscrew_point(dom, B.center, B.radius, static_cast<std::size_t>(cfg.integer("corkscrew_samples")),
                        derive_seed(seed, 0));
    // Antipode of B and the mirror pair across its axis.
    const double nc = std::max(norm(B.center), 1e-300);
    const Point u{B.center[0] / nc, B.center[1] / nc};
    std::vector<Point> xs{{-0.9 * u[0], -0.9 * u[1]}, {-0.6 * u[1], 0.6 * u[0]}, {0.6 * u[1], -0.6 * u[0]}};
    xs.erase(std::remove_if(xs.begin(), xs.end(),
                            [&](const Point& x) { return !dom.contains(x) || distance(x, B.center) < 2.0 * B.radius; }),
             xs.end());
    if (xs.empty()) throw Error(ErrorCode::PreconditionFailed, "no test point of Ω outside 2B");
    const GreenOmegaResult r = green_omega_relation(dom, B, xb.point, xs, N, derive_seed(seed, 1), ctx.walk,
                                                    static_cast<std::size_t>(cfg.integer("rho_samples")));
    const Sampling s = sampling_of(N, derive_seed(seed, 1), ctx.walk);
    rep.value(prefix + "/B", ball_json(B));
    rep.value(prefix + "/x_B", xb.point);
    rep.value(prefix + "/points", xs);
    for (std::size_t i = 0; i < r.ratio.size(); ++i)
        rep.stochastic(prefix + "/ratio_" + std::to_string(i), r.ratio[i], r.stderrs[i], s);
    rep.value(prefix + "/spread", r.spread);
    rep.value(prefix + "/negative_control", r.negative_control);
}

void run_green_check(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const Domain dom = domain_of(cfg);
    const auto N = static_cast<std::size_t>(cfg.integer("walks"));
    const Point x = point_of(cfg, "green_x"), y = point_of(cfg, "green_y"), ext = point_of(cfg, "exterior");
    const bool disk = dom.name() == "disk";

    const ExitDistribution from_y = sample_exits(dom, y, N, derive_seed(ctx.seed, 0), ctx.walk);
    const ExitDistribution from_x = sample_exits(dom, x, N, derive_seed(ctx.seed, 1), ctx.walk);
    const Estimate gxy = green_from_exits(x, from_y);
    const Estimate gyx = green_from_exits(y, from_x);
    const Estimate gext = green_from_exits(ext, from_y);
    rep.stochastic("G_xy", gxy.value, gxy.stderr_, sampling_of(from_y));
    rep.stochastic("G_yx", gyx.value, gyx.stderr_, sampling_of(from_x));
    rep.stochastic("G_exterior", gext.value, gext.stderr_, sampling_of(from_y));

    if (disk) {
        const double exact = disk_green(x, y);
        const double rel = std::abs(gxy.value - exact) / std::abs(exact);
        rep.value("G_exact", exact);
        rep.value("relative_error", rel);
        rep.check("green_relative_error", rel, 0.05, rel < 0.05);
    }
    const double sym = std::abs(gxy.value - gyx.value);
    const double sym_bound = 3.0 * std::hypot(gxy.stderr_, gyx.stderr_);
    rep.check("green_symmetry", sym, sym_bound, sym <= sym_bound);
    if (!dom.contains(ext)) {
        const double bound = 3.0 * gext.stderr_;
        rep.check("green_exterior_zero", std::abs(gext.value), bound, std::abs(gext.value) <= bound + 1e-12);
    }

    const Point x0 = point_of(cfg, "rho_point");
    const auto rs = static_cast<std::size_t>(cfg.integer("rho_samples"));
    const Estimate r = rho(dom, x0, rs, std::max<std::size_t>(1, N / rs), derive_seed(ctx.seed, 2), ctx.walk);
    rep.stochastic("rho", r.value, r.stderr_, sampling_of(r.N, r.seed, ctx.walk));
    rep.check("rho_positive", r.value, 0.0, r.value > 0.0);
    if (disk) {
        const double exact = disk_rho(x0);
        rep.value("rho_exact", exact);
        const double tol = 4.0 * r.stderr_ + 0.002;
        rep.check("rho_matches_disk", std::abs(r.value - exact), tol, std::abs(r.value - exact) <= tol);
    }

    green_omega_section(ctx, dom, ball_of(cfg), "green_omega", derive_seed(ctx.seed, 3));
    const json& go = rep.results()["green_omega"];
    if (go.contains("ratio_2")) {
        const double a = go["ratio_1"]["value"], b = go["ratio_2"]["value"];
        const double sa = go["ratio_1"]["stderr"], sb = go["ratio_2"]["stderr"];
        const double bound = 3.0 * std::hypot(sa, sb);
        rep.check("green_omega_mirror_symmetry", std::abs(a - b), bound, std::abs(a - b) <= bound);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; go.contains("ratio_" + std::to_string(i)); ++i) {
        const double v = go["ratio_" + std::to_string(i)]["value"];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    rep.check("green_omega_lower", lo, 0.2, lo >= 0.2);
    rep.check("green_omega_upper", hi, 5.0, hi <= 5.0);

    if (cfg.flag("slit_control")) {
        const Domain slit = builtin_domain("slit_disk");
        green_omega_section(ctx, slit, Ball{Point{0.5, 0.0}, 0.2}, "slit_control", derive_seed(ctx.seed, 4));
        rep.flag("slit_control", true, "non-uniform domain; spread reported, not checked");
    }
}

// ---------------------------------------------------------------- pole-swap

void run_pole_swap(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const Domain dom = domain_of(cfg);
    const auto N = static_cast<std::size_t>(cfg.integer("walks"));
    const Ball B = ball_of(cfg);
    const auto k = static_cast<std::size_t>(cfg.integer("pieces"));
    const double c0 = cfg.num("c0");
    // Slabs across the boundary: cut perpendicular to the radial direction of B.
    const double nc = norm(B.center);
    const Point axis = nc > 0.0 ? Point{-B.center[1] / nc, B.center[0] / nc} : Point{1.0, 0.0};
    const Point p1 = point_of(cfg, "pole"), p2 = point_of(cfg, "pole2");

    auto record = [&](const std::string& prefix, const ChangeOfPoleResult& r, std::uint64_t s) {
        rep.stochastic(prefix + "/quotient", r.quotient, r.quotient * r.log_stderr, sampling_of(N, s, ctx.walk));
        rep.value(prefix + "/groups", r.groups.size());
        rep.value(prefix + "/merged_pieces", r.merged);
        rep.value(prefix + "/omega1_B", r.omega1_B);
        rep.value(prefix + "/omega2_B", r.omega2_B);
    };

    const std::uint64_t s1 = derive_seed(ctx.seed, 0);
    const ChangeOfPoleResult r = change_of_pole(dom, B, ball_pieces(B, k, axis), p1, p2, c0, N, s1, ctx.walk);
    record("disk", r, s1);
    rep.value("disk/B", ball_json(B));
    CsvWriter& t = rep.table("groups.csv", {"group", "pieces", "ratio1", "ratio2", "quotient"});
    for (std::size_t g = 0; g < r.groups.size(); ++g) {
        std::string pieces;
        for (int p : r.groups[g]) pieces += (pieces.empty() ? "" : ";") + std::to_string(p);
        const double q = std::max(r.ratio1[g], r.ratio2[g]) / std::min(r.ratio1[g], r.ratio2[g]);
        t << g << pieces << r.ratio1[g] << r.ratio2[g] << q;
        t.end_row();
    }
    rep.check("quotient_bounded", r.quotient, 3.0, r.quotient <= 3.0);

    if (cfg.flag("slit_control")) {
        const Domain slit = builtin_domain("slit_disk");
        const Ball Bs{Point{0.5, 0.0}, 0.25};
        const std::uint64_t s2 = derive_seed(ctx.seed, 1);
        const ChangeOfPoleResult q = change_of_pole(slit, Bs, ball_pieces(Bs, k, Point{1.0, 0.0}, true),
                                                    Point{0.5, 0.5}, Point{0.5, -0.5}, c0, N, s2, ctx.walk);
        record("slit_control", q, s2);
        const double ratio = q.quotient / r.quotient;
        rep.value("slit_control/relative_to_disk", ratio);
        rep.flag("slit_control_degrades", ratio >= 2.0, "slit quotient / disk quotient >= 2 (informational)");
    }
}

// ---------------------------------------------------------------- bourgain

void run_bourgain(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const Domain dom = domain_of(cfg);
    const PointMeasure mu = cfg.measure();
    const auto N = static_cast<std::size_t>(cfg.integer("walks"));
    const Ball B = ball_of(cfg);
    const double delta = cfg.num("bourgain_delta");
    const auto count = static_cast<std::size_t>(cfg.integer("probe_count"));

    CsvWriter& t = rep.table("poles.csv", {"scale", "r", "pole", "x1", "x2", "ratio", "stderr"});
    std::vector<double> worst;
    for (int j = 0; j < 3; ++j) {
        const double r = B.radius / std::pow(2.0, j);
        const std::vector<Point> poles = interior_samples(dom, Ball{B.center, delta * r}, count, derive_seed(ctx.seed, 2 * j));
        if (poles.empty()) throw Error(ErrorCode::PreconditionFailed, "no pole in δB ∩ Ω");
        const std::uint64_t s = derive_seed(ctx.seed, 2 * j + 1);
        const BourgainResult b = bourgain_check(dom, mu, B.center, r, delta, poles, N, s, ctx.walk);
        const std::string key = "scale_" + std::to_string(j);
        rep.value(key + "/r", r);
        rep.value(key + "/mu_delta_ball", b.mu_delta_ball);
        rep.value(key + "/vacuous", b.vacuous);
        if (b.vacuous) {
            rep.flag("vacuous:" + key, true, "μ(δB) = 0");
            continue;
        }
        const auto it = std::min_element(b.ratios.begin(), b.ratios.end());
        const auto at = static_cast<std::size_t>(it - b.ratios.begin());
        rep.stochastic(key + "/worst", b.worst, b.stderrs[at], sampling_of(N, s, ctx.walk));
        for (std::size_t i = 0; i < poles.size(); ++i) {
            t << j << r << i << poles[i][0] << poles[i][1] << b.ratios[i] << b.stderrs[i];
            t.end_row();
        }
        worst.push_back(b.worst);
        rep.check("bourgain_positive:" + key, b.worst, 0.0, b.worst > 0.0);
    }
    if (worst.size() >= 2) {
        const double spread = *std::max_element(worst.begin(), worst.end()) / *std::min_element(worst.begin(), worst.end());
        rep.value("scale_spread", spread);
        rep.check("bourgain_scale_stability", spread, 2.0, spread <= 2.0);
    }
}

// ---------------------------------------------------------------- bharnack

std::vector<Point> deep_probes(const Domain& dom, const Ball& ball, double depth, std::size_t count,
                               std::uint64_t seed) {
    std::vector<Point> out;
    for (const Point& p : interior_samples(dom, ball, 8 * count, seed))
        if (-dom.sdf(p) >= depth && out.size() < count) out.push_back(p);
    return out;
}

void run_bharnack(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const Domain dom = domain_of(cfg);
    const auto N = static_cast<std::size_t>(cfg.integer("walks"));
    const Ball B = ball_of(cfg);
    const double A1 = cfg.num("harnack_A1");
    const auto count = static_cast<std::size_t>(cfg.integer("probe_count"));
    HarnackFunction u;
    u.ball = Ball{point_of(cfg, "far_ball_center"), cfg.num("far_ball_radius")};
    HarnackFunction v;
    v.kind = HarnackFunction::Kind::GreenWithPole;
    v.pole = point_of(cfg, "harnack_pole");

    auto section = [&](const Domain& d, const Point& xi, double r, const std::string& prefix, std::uint64_t s,
                       CsvWriter* t) {
        const std::vector<Point> probes = deep_probes(d, Ball{xi, r}, r / 4.0, count, derive_seed(s, 0));
        if (probes.size() < 2) throw Error(ErrorCode::PreconditionFailed, "fewer than two probes at depth r/4");
        const HarnackResult h = boundary_harnack_check(d, xi, r, A1, u, v, probes, N, derive_seed(s, 1), ctx.walk);
        const std::size_t half = N / 2;
        const HarnackResult h0 = boundary_harnack_check(d, xi, r, A1, u, v, probes, half, derive_seed(s, 2), ctx.walk);
        const HarnackResult h1 = boundary_harnack_check(d, xi, r, A1, u, v, probes, half, derive_seed(s, 3), ctx.walk);
        rep.stochastic(prefix + "/oscillation", h.oscillation, split_stderr(h0.oscillation, h1.oscillation),
                       sampling_of(N, derive_seed(s, 1), ctx.walk));
        rep.value(prefix + "/probes", probes.size());
        if (t)
            for (std::size_t i = 0; i < probes.size(); ++i) {
                *t << prefix << i << probes[i][0] << probes[i][1] << h.u[i] << h.v[i] << h.ratios[i];
                t->end_row();
            }
        return h.oscillation;
    };

    CsvWriter& t = rep.table("probes.csv", {"run", "probe", "x1", "x2", "u", "v", "ratio"});
    const double osc = section(dom, B.center, B.radius, "domain", derive_seed(ctx.seed, 0), &t);
    rep.check("oscillation_bounded", osc, 4.0, osc <= 4.0);
    if (cfg.flag("slit_control")) {
        const double so = section(builtin_domain("slit_disk"), Point{0.5, 0.0}, B.radius, "slit_control",
                                  derive_seed(ctx.seed, 1), &t);
        rep.flag("slit_control_degrades", so > osc, "probes straddle the slit (informational)");
    }
}

// ---------------------------------------------------------------- ainfty

double best_subset(const std::vector<double>& mu, const std::vector<double>& om, double eps, bool& exact_hit) {
    double mt = 0.0, ot = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        mt += mu[i];
        ot += om[i];
    }
    const double budget = eps * mt;
    double best = 0.0;
    exact_hit = false;
    for (std::uint32_t s = 0; s < (1u << mu.size()); ++s) {
        double m = 0.0, o = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (s >> i & 1u) {
                m += mu[i];
                o += om[i];
            }
        if (std::abs(m - budget) <= 1e-12 * mt) exact_hit = true;
        if (m <= budget * (1.0 + 1e-12)) best = std::max(best, o / ot);
    }
    return best;
}

void run_ainfty(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const std::vector<double> eps_list = cfg.list("ainfty_eps");

    // Random instances against exhaustive search; integer weights make
    // exact budget hits common.
    const auto instances = static_cast<std::size_t>(cfg.integer("ainfty_instances"));
    const auto atoms = static_cast<std::size_t>(cfg.integer("ainfty_atoms"));
    StreamRng rng(ctx.seed, 0);
    std::size_t below = 0, greedy_exact = 0, greedy_equal = 0, hits = 0, hit_equal = 0;
    for (std::size_t t = 0; t < instances; ++t) {
        const bool integer = t % 2 == 1;
        std::vector<double> mu(atoms), om(atoms);
        for (std::size_t i = 0; i < atoms; ++i) {
            mu[i] = integer ? std::floor(6.0 * rng.uniform()) : rng.uniform();
            om[i] = integer ? std::floor(6.0 * rng.uniform()) : rng.uniform();
        }
        om[0] += 1.0;
        mu[1] += 1.0;
        const double eps = eps_list[t % eps_list.size()];
        const AinftyResult r = ainfty_scan(mu, om, eps);
        bool hit = false;
        const double set = best_subset(mu, om, eps, hit);
        if (r.eps_prime < set - 1e-12) ++below;
        if (!r.fractional) {
            ++greedy_exact;
            if (std::abs(r.eps_prime - set) <= 1e-12) ++greedy_equal;
        }
        if (hit) {
            ++hits;
            if (std::abs(r.eps_prime - set) <= 1e-12) ++hit_equal;
        }
    }
    rep.value("random/instances", instances);
    rep.value("random/atoms", atoms);
    rep.value("random/relaxation_below_set", below);
    rep.value("random/greedy_meets_budget", greedy_exact);
    rep.value("random/greedy_meets_budget_equal", greedy_equal);
    rep.value("random/some_subset_meets_budget", hits);
    rep.value("random/some_subset_meets_budget_equal", hit_equal);
    rep.check("relaxation_dominates_sets", static_cast<double>(below), 0.0, below == 0);
    rep.check("equality_when_greedy_meets_budget", static_cast<double>(greedy_equal),
              static_cast<double>(greedy_exact), greedy_equal == greedy_exact);

    // Harmonic measure from a corkscrew pole against μ on the lattice
    // partitions of B.
    const Domain dom = domain_of(cfg);
    const PointMeasure mu = cfg.measure();
    const StoppingConfig sc = cfg.stopping();
    const Ball B = ball_of(cfg);
    const auto N = static_cast<std::size_t>(cfg.integer("walks"));
    const Corkscrew xb = corkscrew_point(dom, B.center, sc.kappa() * B.radius, sc.corkscrew_samples,
                                         derive_seed(ctx.seed, 1));
    const ExitDistribution ex = ctx.exits(dom, xb.point, N, derive_seed(ctx.seed, 2), "x_B");
    std::vector<std::size_t> in_B;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (B.contains(mu.point(i))) in_B.push_back(i);
    if (in_B.empty()) throw Error(ErrorCode::PreconditionFailed, "μ has no atom in B");
    const PointMeasure muB = mu.restricted(in_B);
    const DMLattice lat = ctx.lattice(muB, cfg.lattice(), "mu_B");
    rep.value("pole", xb.point);
    rep.value("B", ball_json(B));

    auto scan = [&](const ExitDistribution& e) {
        const OmegaOnMu om = bin_omega(e, mu, B);
        std::vector<std::vector<double>> out;
        for (int k = lat.k0(); k <= lat.k_max(); ++k) {
            const auto& ids = lat.generation(k);
            std::vector<double> m(ids.size(), 0.0), w(ids.size(), 0.0);
            for (std::size_t c = 0; c < ids.size(); ++c)
                for (std::size_t a : lat.cell(ids[c]).members) {
                    m[c] += muB.weight(a);
                    w[c] += om.omega[in_B[a]];
                }
            std::vector<double> row;
            for (double eps : eps_list) row.push_back(ainfty_scan(m, w, eps).eps_prime);
            out.push_back(row);
        }
        return out;
    };
    const auto full = scan(ex);
    const auto hv = halves(ex);
    const auto a = scan(hv[0]), b = scan(hv[1]);
    CsvWriter& t = rep.table("ainfty.csv", {"generation", "cells", "eps", "eps_prime", "stderr", "N", "seed"});
    for (std::size_t g = 0; g < full.size(); ++g)
        for (std::size_t e = 0; e < eps_list.size(); ++e) {
            const int k = lat.k0() + static_cast<int>(g);
            t << k << lat.generation(k).size() << eps_list[e] << full[g][e] << split_stderr(a[g][e], b[g][e])
              << ex.walk_count << ex.seed;
            t.end_row();
        }
    const std::size_t finest = full.size() - 1;
    for (std::size_t e = 0; e < eps_list.size(); ++e)
        rep.stochastic("finest_generation/eps_prime_" + format_double(eps_list[e]), full[finest][e],
                       split_stderr(a[finest][e], b[finest][e]), sampling_of(ex));
}

// ---------------------------------------------------------------- stopping-time pipeline

struct Setup {
    Domain dom;
    PointMeasure mu;
    StoppingConfig sc;
    Ball B;
    B0Result b0;
    Corkscrew xb;
    Ball window;
};

Setup make_setup(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Setup s{domain_of(cfg), cfg.measure(), cfg.stopping(), ball_of(cfg), {}, {}, {}};
    s.b0 = make_B0(s.mu, s.B, s.sc);
    s.xb = corkscrew_point(s.dom, s.B.center, s.sc.kappa() * s.B.radius, s.sc.corkscrew_samples,
                           derive_seed(ctx.seed, 1));
    s.window = s.b0.B0.scaled(cfg.num("bin_window"));
    Report& rep = ctx.rep;
    rep.value("setup/B", ball_json(s.B));
    rep.value("setup/B0", ball_json(s.b0.B0));
    rep.value("setup/lambda", s.b0.lambda);
    rep.value("setup/thin_ratio", s.b0.thin_ratio);
    rep.value("setup/doubling_ratio", s.b0.mu_2B / s.b0.mu_half_delta_B);
    rep.value("setup/x_B", s.xb.point);
    rep.value("setup/x_B_depth_ratio", s.xb.c);
    rep.value("setup/atoms", s.mu.size());
    rep.check("B0:mu_doubling", s.b0.mu_2B0, 2.0 * s.sc.C2 * s.b0.mu_B0, s.b0.mu_doubling);
    rep.check("B0:mu_B_bound", s.b0.mu_B, s.sc.C2 * s.b0.mu_B0, s.b0.mu_B_bound);
    return s;
}

enum Parts : unsigned { kGrowth = 1, kKey = 2, kT1 = 4 };

struct Stage {
    OmegaOnMu om;
    std::optional<DMLattice> lat;
    B0Result b0w;
    BadCubeReport bad;
    std::optional<KeyLemmaResult> key;
    std::string key_error;
    std::optional<T1Result> t1;
    Stats stats;
};

/// Everything downstream of the walks. With a label the ω lattice is
/// registered in the report; split-half reruns pass none.
Stage analyze(Context& ctx, const Setup& s, const ExitDistribution& ex, unsigned parts, const std::string& label) {
    Stage st;
    st.om = bin_omega(ex, s.mu, s.window);
    const LatticeParams lp = ctx.cfg.lattice();
    if (label.empty())
        st.lat.emplace(build_lattice(st.om.sigma, lp));
    else
        st.lat.emplace(ctx.lattice(st.om.sigma, lp, label));
    st.b0w = make_B0(s.mu, s.B, s.sc, &st.om.omega);
    st.bad = classify_bad(*st.lat, st.om, s.mu, s.b0.B0, s.sc);
    const BadCubeReport& b = st.bad;
    Stats& v = st.stats;
    v["bad_cubes/omega_B0"] = b.omega_B0;
    v["bad_cubes/omega_doubling_ratio"] = st.b0w.omega_B0 > 0.0 ? st.b0w.omega_B / st.b0w.omega_B0 : kNaN;
    v["bad_cubes/bad1_cells"] = static_cast<double>(b.bad1.size());
    v["bad_cubes/bad2_cells"] = static_cast<double>(b.bad2.size());
    v["bad_cubes/bad1_constant"] = b.bad1_constant;
    v["bad_cubes/bad2_constant"] = b.bad2_constant;
    v["bad_cubes/eps1_prime"] = b.eps1_prime;
    v["bad_cubes/eps2_prime"] = b.eps2_prime;
    v["bad_cubes/poisson_lower"] = b.poisson_lower;
    v["bad_cubes/poisson_upper"] = b.poisson_upper;
    v["bad_cubes/ainfty_eps_prime"] = b.ainfty_eps_prime;
    v["bad_cubes/complement_mu_share"] = b.complement_mu_share;
    if (parts & kGrowth) {
        const GrowthCheck g = growth_check(*st.lat, st.om, s.mu, b, s.b0.B0, s.sc);
        v["growth/cell_constant"] = g.cell_constant;
        v["growth/ball_constant"] = g.ball_constant;
    }
    if (parts & kKey) {
        try {
            st.key = key_lemma_check(*st.lat, st.om, s.mu, b, s.b0.B0, s.B, s.xb.point, s.sc);
            v["key_lemma/worst"] = st.key->worst;
            v["key_lemma/maximal_worst"] = st.key->maximal_worst;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyProbeFamily) throw;
            st.key_error = e.what();
        }
    }
    if (parts & kT1) {
        st.t1 = t1_hypotheses(st.om, s.mu, b, s.b0.B0, s.B, s.xb.point, s.sc);
        v["t1/C4"] = st.t1->C4;
        v["t1/C5"] = st.t1->C5;
        v["t1/delta1"] = st.t1->delta1;
        v["t1/nu_norm_ratio"] = st.t1->nu_norm_ratio;
        v["t1/operator_norm"] = st.t1->op.norm;
    }
    return st;
}

/// Statistics of the two half samples; a half that fails (say with an
/// empty G0) contributes nothing and the affected errors become NaN.
std::array<Stats, 2> half_stats(Context& ctx, const Setup& s, const ExitDistribution& ex, unsigned parts) {
    std::array<Stats, 2> out;
    const auto hv = halves(ex);
    for (int h = 0; h < 2; ++h) {
        try {
            out[h] = analyze(ctx, s, hv[h], parts, "").stats;
        } catch (const Error&) {
        }
    }
    return out;
}

void report_stage(Context& ctx, const std::string& prefix, const Setup& s, const Stage& st, const ExitDistribution& ex,
                  const std::array<Stats, 2>& hs, bool tables) {
    Report& rep = ctx.rep;
    const std::string p = prefix.empty() ? "" : prefix + "/";
    report_stats(rep, prefix, st.stats, &hs[0], &hs[1], sampling_of(ex));
    const BadCubeReport& b = st.bad;
    rep.value(p + "bad_cubes/good_cells", b.good.size());
    rep.value(p + "bad_cubes/G0_atoms", b.G0.size());
    rep.stochastic(p + "bad_cubes/omega_G0", b.omega_G0, b.omega_G0_stderr, sampling_of(ex));
    rep.value(p + "bad_cubes/mu_G0", b.mu_G0);
    rep.value(p + "bad_cubes/mu_B0", b.mu_B0);

    const double tol = 1.0 + 1e-9;
    const double c1 = b.mu_B0 > 0.0 ? b.mu_alphaB0 / b.mu_B0 : kNaN;
    const double c2 = b.omega_B0 > 0.0 ? b.omega_alphaB0 / b.omega_B0 : kNaN;
    rep.check(p + "bad1_packing", b.bad1_constant, c1, b.bad1_constant <= c1 * tol);
    rep.check(p + "bad2_packing", b.bad2_constant, c2, b.bad2_constant <= c2 * tol);
    rep.check(p + "poisson_lower", b.poisson_lower, 1.0 / s.sc.A, b.poisson_lower * tol >= 1.0 / s.sc.A);
    rep.check(p + "poisson_upper", b.poisson_upper, s.sc.A, b.poisson_upper <= s.sc.A * tol);
    rep.check(p + "omega_doubling", st.b0w.omega_B, st.b0w.omega_B0 / (1.0 - s.sc.eps_prime), st.b0w.omega_doubling);
    if (st.t1) {
        rep.value(p + "t1/degenerate", st.t1->degenerate);
        rep.value(p + "t1/G1_atoms", st.t1->G1.size());
        rep.check(p + "t1_nu_norm", st.t1->nu_norm_ratio, 1.0 / (1.0 - s.sc.eps_prime), st.t1->nu_norm_ok);
    }
    if (st.key) {
        rep.value(p + "key_lemma/probes", st.key->probes);
        rep.value(p + "key_lemma/points", st.key->points);
        rep.value(p + "key_lemma/worst_cell", st.key->worst_cell);
    }
    if (!tables) return;
    CsvWriter& t = rep.table("bad_cells.csv", {"cell", "kind", "generation", "radius", "omega", "mu"});
    auto rows = [&](const std::vector<std::size_t>& ids, const char* kind) {
        for (std::size_t id : ids) {
            const DMCell& c = st.lat->cell(id);
            t << id << kind << c.generation << c.radius << c.mass << b.cell_mu[id];
            t.end_row();
        }
    };
    rows(b.bad1, "bad1");
    rows(b.bad2, "bad2");
    rows(b.good, "good");
}

void run_bad_cubes(Context& ctx) {
    const Setup s = make_setup(ctx);
    const auto N = static_cast<std::size_t>(ctx.cfg.integer("walks"));
    const ExitDistribution ex = ctx.exits(s.dom, s.xb.point, N, derive_seed(ctx.seed, 0), "x_B");
    const Stage st = analyze(ctx, s, ex, kGrowth, "omega");
    report_stage(ctx, "", s, st, ex, half_stats(ctx, s, ex, kGrowth), true);
}

/// Key lemma at N and, when configured, at 2N walks from the same seed.
/// Returns false when the probe family is empty.
bool key_lemma_section(Context& ctx, const Setup& s, const std::string& prefix, const ExitDistribution& ex,
                       const Stage& st) {
    Report& rep = ctx.rep;
    if (!st.key) {
        rep.flag("vacuous:key_lemma", true, st.key_error);
        return false;
    }
    if (!ctx.cfg.flag("key_lemma_refine")) return true;
    const ExitDistribution ex2 = sample_exits(s.dom, s.xb.point, 2 * ex.walk_count, ex.seed, ctx.walk);
    const Stage st2 = analyze(ctx, s, ex2, kKey, "");
    if (!st2.key) {
        rep.flag("vacuous:key_lemma_refined", true, st2.key_error);
        return true;
    }
    const auto hs = half_stats(ctx, s, ex2, kKey);
    Stats refined{{"worst", st2.key->worst}, {"maximal_worst", st2.key->maximal_worst}};
    Stats h0, h1;
    for (const char* k : {"worst", "maximal_worst"}) {
        const std::string key = std::string("key_lemma/") + k;
        if (hs[0].count(key)) h0[k] = hs[0].at(key);
        if (hs[1].count(key)) h1[k] = hs[1].at(key);
    }
    report_stats(rep, prefix + "key_lemma/refined", refined, &h0, &h1, sampling_of(ex2));
    const double a = st.key->worst, b = st2.key->worst;
    const double drift = std::max(a, b) / std::min(a, b);
    rep.value(prefix + "key_lemma/refinement_drift", drift);
    rep.check(prefix + "key_lemma_refinement_drift", drift, 2.0, std::isfinite(drift) && drift < 2.0);
    return true;
}

void run_key_lemma(Context& ctx) {
    const Setup s = make_setup(ctx);
    const auto N = static_cast<std::size_t>(ctx.cfg.integer("walks"));
    const ExitDistribution ex = ctx.exits(s.dom, s.xb.point, N, derive_seed(ctx.seed, 0), "x_B");
    const Stage st = analyze(ctx, s, ex, kKey, "omega");
    report_stage(ctx, "", s, st, ex, half_stats(ctx, s, ex, kKey), false);
    key_lemma_section(ctx, s, "", ex, st);
}

// ---------------------------------------------------------------- corona and packing

struct CoronaRun {
    std::unique_ptr<DMLattice> lat;
    CoronaTree tree;
    double packing = 0.0;
};

CoronaRun corona_run(Context& ctx, std::unique_ptr<DMLattice> lat, const StoppingConfig& sc, const Domain* dom) {
    CoronaRun r;
    r.lat = std::move(lat);
    r.tree = build_corona(*r.lat, pick_root(*r.lat), sc, dom, static_cast<std::size_t>(ctx.cfg.integer("max_nodes")));
    r.packing = packing_check(r.tree);
    return r;
}

void report_corona(Context& ctx, const std::string& prefix, const CoronaRun& r, bool files) {
    Report& rep = ctx.rep;
    const CoronaTree& tree = r.tree;
    const DMLattice& lat = *r.lat;
    const std::string p = prefix + "/";
    std::size_t ugly = 0, nice = 0;
    bool top_doubling = true;
    std::map<std::size_t, std::size_t> next_owner;
    bool next_disjoint = true;
    for (const CoronaNode& n : tree.nodes) {
        ugly += n.info.label == CoronaLabel::Ugly;
        nice += n.info.label == CoronaLabel::Nice;
        top_doubling = top_doubling && lat.cell(n.cell).doubling;
        for (std::size_t c : n.next) next_disjoint = next_owner.emplace(tree.nodes[c].cell, n.cell).second && next_disjoint;
    }
    const DMCell& root = lat.cell(tree.root_cell);
    rep.value(p + "root", json{{"cell", tree.root_cell}, {"generation", root.generation}, {"mass", root.mass},
                               {"theta", lat.theta(root)}});
    rep.value(p + "nodes", tree.nodes.size());
    rep.value(p + "ugly", ugly);
    rep.value(p + "nice", nice);
    rep.value(p + "unresolved", tree.unresolved);
    rep.value(p + "depth_exhausted", tree.depth_exhausted);
    rep.value(p + "truncated", tree.truncated);
    rep.value(p + "eq10_violations", tree.eq10_violations);
    rep.value(p + "eta", ctx.cfg.num("eta"));
    rep.value(p + "packing", r.packing);
    if (tree.truncated) rep.flag("truncated:" + prefix, true, "max_nodes reached");
    rep.check(prefix + ":packing_finite", r.packing, std::numeric_limits<double>::infinity(), std::isfinite(r.packing));
    rep.check(prefix + ":top_doubling", top_doubling ? 0.0 : 1.0, 0.0, top_doubling);
    rep.check(prefix + ":next_families_disjoint", next_disjoint ? 0.0 : 1.0, 0.0, next_disjoint);

    const RStarL1 rs = r_star_l1_check(tree);
    rep.value(p + "r_star_l1", json{{"normalized", rs.normalized},
                                    {"nu_mass", rs.nu_mass},
                                    {"atoms", rs.atoms},
                                    {"tail", rs.tail},
                                    {"ugly_levels", rs.ugly_levels},
                                    {"nice_levels", rs.nice_levels},
                                    {"splitting_ok", rs.splitting_ok}});
    rep.check(prefix + ":level_splitting", rs.normalized, rs.tail + rs.ugly_levels + rs.nice_levels, rs.splitting_ok);
    if (!files) return;

    rep.json_file(prefix + ".json", tree.to_json());
    CsvWriter& t = rep.table(prefix + "_nodes.csv", {"node", "cell", "generation", "level", "parent", "label", "theta",
                                                     "mass", "theta_mu", "packing_partial", "next_sum", "eq10_ok"});
    double partial = 0.0;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const CoronaNode& n = tree.nodes[i];
        partial += n.theta_mu;
        const bool ugly_node = n.info.label == CoronaLabel::Ugly;
        t << i << n.cell << lat.cell(n.cell).generation << n.level
          << (n.parent ? std::to_string(*n.parent) : std::string()) << to_string(n.info.label) << n.theta << n.mass
          << n.theta_mu << (root.mass > 0.0 ? partial / root.mass : 0.0) << (ugly_node ? n.next_sum : kNaN)
          << (ugly_node ? (n.eq10_ok ? "true" : "false") : "");
        t.end_row();
    }
}

void run_corona(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const PointMeasure mu = cfg.measure();
    std::optional<Domain> dom;
    if (cfg.flag("corona_domain")) dom.emplace(domain_of(cfg));
    auto lat = std::make_unique<DMLattice>(ctx.lattice(mu, cfg.lattice(), "mu"));
    const CoronaRun r = corona_run(ctx, std::move(lat), cfg.stopping(), dom ? &*dom : nullptr);
    report_corona(ctx, "corona", r, true);
}

/// Packing at the configured depth and `lattice_deepen` generations deeper.
void packing_section(Context& ctx, const PointMeasure& mu, const Domain* dom, CoronaRun base) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    LatticeParams deeper = cfg.lattice();
    deeper.A0 = base.lat->A0();
    deeper.k0 = base.lat->k0();
    deeper.k_max = base.lat->k_max() + static_cast<int>(cfg.integer("lattice_deepen"));
    const CoronaRun deep = corona_run(ctx, std::make_unique<DMLattice>(ctx.lattice(mu, deeper, "mu_deepened")),
                                      cfg.stopping(), dom);
    report_corona(ctx, "packing_deepened", deep, false);
    const std::array<const CoronaRun*, 2> runs{&base, &deep};
    CsvWriter& t = rep.table("packing.csv", {"lattice", "k_max", "nodes", "unresolved", "eq10_violations", "packing"});
    for (const CoronaRun* r : runs) {
        t << (r == &base ? "base" : "deepened") << r->lat->k_max() << r->tree.nodes.size() << r->tree.unresolved
          << r->tree.eq10_violations << r->packing;
        t.end_row();
    }
    CsvWriter& e = rep.table("eq10.csv", {"lattice", "node", "cell", "generation", "theta_mu", "next_sum", "rhs", "ok"});
    for (const CoronaRun* r : runs)
        for (std::size_t i = 0; i < r->tree.nodes.size(); ++i) {
            const CoronaNode& n = r->tree.nodes[i];
            if (n.info.label != CoronaLabel::Ugly) continue;
            e << (r == &base ? "base" : "deepened") << i << n.cell << r->lat->cell(n.cell).generation << n.theta_mu
              << n.next_sum << 2.0 * n.theta_mu << n.eq10_ok;
            e.end_row();
        }
    const double a = base.packing, b = deep.packing;
    const double drift = (a > 0.0 && b > 0.0) ? std::max(a, b) / std::min(a, b) : (a == b ? 1.0 : kNaN);
    rep.value("packing/base", a);
    rep.value("packing/deepened", b);
    rep.value("packing/drift", drift);
    rep.check("packing_drift", drift, 2.0, std::isfinite(drift) && drift < 2.0);
}

void run_packing(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const PointMeasure mu = cfg.measure();
    std::optional<Domain> dom;
    if (cfg.flag("corona_domain")) dom.emplace(domain_of(cfg));
    const Domain* d = dom ? &*dom : nullptr;
    CoronaRun base = corona_run(ctx, std::make_unique<DMLattice>(ctx.lattice(mu, cfg.lattice(), "mu")), cfg.stopping(), d);
    report_corona(ctx, "packing_base", base, false);
    packing_section(ctx, mu, d, std::move(base));
}

// ---------------------------------------------------------------- riesz-norm

void run_riesz_norm(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const std::vector<double> sizes = cfg.list("riesz_sizes"), multiples = cfg.list("riesz_eps_multiples");
    const RieszConfig rc = RieszConfig::standard(1);
    CsvWriter& t = rep.table("riesz_norm.csv", {"N", "eps", "norm", "iterations", "converged"});
    // Unit spacing: atoms at i + 1/2 with unit weight. The truncated norm
    // is invariant under x -> s x, w -> s w, so this is the unit segment.
    std::map<double, std::vector<double>> by_eps;
    bool converged = true;
    for (double size : sizes) {
        const auto N = static_cast<std::size_t>(size);
        const PointMeasure mu = generators::segment(N, Point{0.0, 0.0}, Point{static_cast<double>(N), 0.0});
        double sup = 0.0;
        for (double m : multiples) {
            const OperatorNorm on = operator_norm_l2(rc, mu, m);
            t << N << m << on.norm << on.iterations << on.converged;
            t.end_row();
            by_eps[m].push_back(on.norm);
            sup = std::max(sup, on.norm);
            converged = converged && on.converged;
        }
        rep.value("sup_over_eps/N_" + std::to_string(N), sup);
    }
    rep.check("power_iteration_converged", converged ? 0.0 : 1.0, 0.0, converged);
    for (const auto& [m, norms] : by_eps) {
        const double spread = *std::max_element(norms.begin(), norms.end()) / *std::min_element(norms.begin(), norms.end()) - 1.0;
        rep.value("spread_across_N/eps_" + format_double(m), spread);
        if (m == 1.0 && norms.size() > 1) rep.check("norm_spread_at_spacing", spread, 0.10, spread <= 0.10);
    }
}

// ---------------------------------------------------------------- full-pipeline

double median_spacing(const PointMeasure& mu, std::span<const std::size_t> idx) {
    std::vector<double> nn;
    for (std::size_t a : idx) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t b : idx)
            if (a != b) {
                const double d = distance(mu.point(a), mu.point(b));
                if (d > 0.0) best = std::min(best, d);
            }
        if (std::isfinite(best)) nn.push_back(best);
    }
    if (nn.empty()) return kNaN;
    std::nth_element(nn.begin(), nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2), nn.end());
    return nn[nn.size() / 2];
}

void run_full_pipeline(Context& ctx) {
    const Config& cfg = ctx.cfg;
    Report& rep = ctx.rep;
    const Setup s = make_setup(ctx);
    const auto N = static_cast<std::size_t>(cfg.integer("walks"));

    auto lat_mu = std::make_unique<DMLattice>(ctx.lattice(s.mu, cfg.lattice(), "mu"));
    const LatticeAudit audit = audit_lattice(*lat_mu);
    if (!cfg.flag("lattice_audit")) ctx.record_audit("mu", audit);
    rep.value("lattice_audit/generations", lat_mu->generation_count());
    rep.value("lattice_audit/passed", audit.passed());

    const ExitDistribution ex = ctx.exits(s.dom, s.xb.point, N, derive_seed(ctx.seed, 0), "x_B");
    const unsigned parts = kGrowth | kKey | kT1;
    const Stage st = analyze(ctx, s, ex, parts, "omega");
    report_stage(ctx, "", s, st, ex, half_stats(ctx, s, ex, parts), true);
    key_lemma_section(ctx, s, "", ex, st);

    std::optional<Domain> dom;
    if (cfg.flag("corona_domain")) dom.emplace(domain_of(cfg));
    const Domain* d = dom ? &*dom : nullptr;
    CoronaRun base = corona_run(ctx, std::move(lat_mu), s.sc, d);
    report_corona(ctx, "corona", base, true);
    packing_section(ctx, s.mu, d, std::move(base));

    // Riesz norm of μ on B0 at multiples of the typical spacing.
    std::vector<std::size_t> in_B0;
    for (std::size_t i = 0; i < s.mu.size(); ++i)
        if (s.b0.B0.contains(s.mu.point(i))) in_B0.push_back(i);
    const double h = median_spacing(s.mu, in_B0);
    rep.value("riesz_norm/atoms", in_B0.size());
    rep.value("riesz_norm/spacing", h);
    CsvWriter& t = rep.table("riesz_norm.csv", {"atoms", "eps", "norm", "iterations", "converged"});
    const RieszConfig rc = RieszConfig::standard(s.mu.n());
    double sup = 0.0;
    if (std::isfinite(h))
        for (double m : cfg.list("riesz_eps_multiples")) {
            const OperatorNorm on = operator_norm_l2(rc, s.mu, in_B0, m * h);
            t << in_B0.size() << m * h << on.norm << on.iterations << on.converged;
            t.end_row();
            sup = std::max(sup, on.norm);
        }
    rep.value("riesz_norm/sup_over_eps", sup);
}

// ---------------------------------------------------------------- registry

struct Entry {
    ExperimentInfo info;
    void (*run)(Context&);
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = {
        {{"lattice-audit", "lattice invariants, doubling cells, small boundaries and a Whitney decomposition"},
         run_lattice_audit},
        {{"wos-validate", "walk-on-spheres exits against the analytic harmonic measure of the disk"}, run_wos_validate},
        {{"green-check", "Green function from exits: disk values, symmetry, exterior zero, rho, omega/G relation"},
         run_green_check},
        {{"pole-swap", "change of pole: normalized harmonic measure of boundary pieces from two poles"}, run_pole_swap},
        {{"bourgain", "lower bound of harmonic measure of B from poles in delta B, at three scales"}, run_bourgain},
        {{"bharnack", "boundary Harnack oscillation of u/v near a boundary point"}, run_bharnack},
        {{"ainfty", "fractional knapsack A-infinity scan: exhaustive oracle and lattice partitions"}, run_ainfty},
        {{"bad-cubes", "B0, Bad1/Bad2 cells, G0 and growth constants from sampled harmonic measure"}, run_bad_cubes},
        {{"key-lemma", "truncated Riesz transform of harmonic measure over the probe family"}, run_key_lemma},
        {{"corona", "nice/ugly stopping-time tree with packing and R_* L1 checks"}, run_corona},
        {{"packing", "corona packing ratio and its drift when the lattice deepens"}, run_packing},
        {{"riesz-norm", "truncated Riesz operator norms on equispaced segments"}, run_riesz_norm},
        {{"full-pipeline", "lattice audit, bad cubes, key lemma, T1 hypotheses, corona, packing and Riesz norm"},
         run_full_pipeline},
    };
    return entries;
}

}  // namespace

const std::vector<ExperimentInfo>& list_experiments() {
    static const std::vector<ExperimentInfo> infos = [] {
        std::vector<ExperimentInfo> v;
        for (const Entry& e : registry()) v.push_back(e.info);
        return v;
    }();
    return infos;
}

Report run_experiment(const Config& cfg) {
    const std::string name = cfg.str("experiment");
    for (const Entry& e : registry())
        if (e.info.name == name) {
            Report rep(name);
            Context ctx(cfg, rep);
            e.run(ctx);
            return rep;
        }
    throw Error(ErrorCode::ConfigError, "unknown experiment '" + name + "'");
}

}  // namespace hmlab
