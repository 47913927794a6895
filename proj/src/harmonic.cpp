#include "hmlab/harmonic.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hmlab/error.h"
#include "hmlab/random.h"
#include "hmlab/riesz.h"

namespace hmlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double fraction_in(const ExitDistribution& dist, const Ball& B) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < dist.walk_count; ++i)
        if (dist.kept[i] && B.contains(dist.exit(i))) ++hits;
    return dist.valid() ? static_cast<double>(hits) / static_cast<double>(dist.valid()) : 0.0;
}

double binomial_se(double p, std::size_t n) {
    return n ? std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n)) : kInf;
}

double rel(double se, double v) { return v != 0.0 ? se / std::abs(v) : kInf; }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t j) {
    return splitmix64(seed ^ splitmix64(j + 1));
}

Targets arc_targets(std::size_t k, double phase) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "need at least one arc");
    Targets t;
    t.count = k;
    t.classify = [k, phase](PointView z, int) {
        double a = std::atan2(z[1], z[0]) - phase;
        a -= 2.0 * kPi * std::floor(a / (2.0 * kPi));
        const auto j = static_cast<std::size_t>(a / (2.0 * kPi) * static_cast<double>(k));
        return static_cast<int>(std::min(j, k - 1));
    };
    return t;
}

Targets square_side_targets() {
    Targets t;
    t.count = 4;
    t.classify = [](PointView z, int) {
        const double dx = 1.0 - std::abs(z[0]), dy = 1.0 - std::abs(z[1]);
        if (dy <= dx) return z[1] < 0.0 ? 0 : 2;
        return z[0] > 0.0 ? 1 : 3;
    };
    return t;
}

Targets ball_targets(std::vector<Ball> balls) {
    Targets t;
    t.count = balls.size();
    t.partial = true;
    t.classify = [balls = std::move(balls)](PointView z, int) {
        for (std::size_t j = 0; j < balls.size(); ++j)
            if (balls[j].contains(z)) return static_cast<int>(j);
        return -1;
    };
    return t;
}

Targets ball_pieces(const Ball& B, std::size_t k, const Point& axis, bool split_sides) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "need at least one piece");
    Targets t;
    t.count = split_sides ? 2 * k : k;
    t.partial = true;
    t.classify = [B, k, axis, split_sides](PointView z, int side) {
        if (!B.contains(z)) return -1;
        const double s = dot(sub(z, B.center), axis) / B.radius;
        const auto j = static_cast<std::size_t>(
            std::clamp(std::floor(static_cast<double>(k) * (s + 1.0) / 2.0), 0.0, static_cast<double>(k - 1)));
        return static_cast<int>(split_sides && side < 0 ? j + k : j);
    };
    return t;
}

std::vector<int> target_ids(const ExitDistribution& dist, const Targets& targets) {
    std::vector<int> ids(dist.walk_count, -1);
    for (std::size_t i = 0; i < dist.walk_count; ++i)
        if (dist.kept[i]) ids[i] = targets.classify(dist.exit(i), dist.sides[i]);
    return ids;
}

HarmonicMeasure tally(const ExitDistribution& dist, const Targets& targets) {
    HarmonicMeasure hm;
    hm.counts.assign(targets.count, 0);
    hm.walks = dist.walk_count;
    hm.valid = dist.valid();
    hm.seed = dist.seed;
    hm.shell_eps = dist.shell_eps;
    hm.discard_fraction = dist.discard_fraction();
    for (int id : target_ids(dist, targets)) {
        if (id < 0)
            ++hm.unassigned;
        else
            ++hm.counts[static_cast<std::size_t>(id)];
    }
    hm.unassigned -= dist.discarded;
    for (std::size_t c : hm.counts) {
        const double p = hm.valid ? static_cast<double>(c) / static_cast<double>(hm.valid) : 0.0;
        hm.prob.push_back(p);
        hm.stderr_.push_back(binomial_se(p, hm.valid));
    }
    return hm;
}

HarmonicMeasure harmonic_measure(const Domain& dom, PointView x, const Targets& targets, std::size_t N,
                                 std::uint64_t seed, const WalkParams& params) {
    return tally(sample_exits(dom, x, N, seed, params), targets);
}

double disk_poisson_arc(PointView x, double th0, double th1) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    auto P = [&](double th) {
        const double dx = std::cos(th) - x[0], dy = std::sin(th) - x[1];
        return (1.0 - r2) / (2.0 * kPi * (dx * dx + dy * dy));
    };
    constexpr int kIntervals = 8192;
    const double h = (th1 - th0) / kIntervals;
    double s = P(th0) + P(th1);
    for (int i = 1; i < kIntervals; ++i) s += (i % 2 ? 4.0 : 2.0) * P(th0 + i * h);
    return s * h / 3.0;
}

double disk_green(PointView x, PointView y) {
    // |1 - x conj(y)| in complex notation.
    const double re = 1.0 - (x[0] * y[0] + x[1] * y[1]);
    const double im = -(x[1] * y[0] - x[0] * y[1]);
    return std::log(std::hypot(re, im) / distance(x, y)) / (2.0 * kPi);
}

Corkscrew corkscrew_point(const Domain& dom, PointView xi, double r, std::size_t samples, std::uint64_t seed) {
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
    const Point c(xi.begin(), xi.end());
    Corkscrew best;
    best.c = -kInf;
    for (const Point& p : quasi_ball(c, r, samples, seed)) {
        const double sd = dom.sdf(p);
        if (!(sd < 0.0)) continue;
        const double v = std::min(-sd, r - distance(p, c));
        if (v > best.c) {
            best.c = v;
            best.point = p;
        }
    }
    if (best.c == -kInf) throw Error(ErrorCode::NoInteriorPoint, "no sample of B(xi, r) lies inside the domain");
    best.c /= r;
    return best;
}

Estimate green_from_exits(PointView x, const ExitDistribution& from_y) {
    const RieszConfig cfg = RieszConfig::standard(from_y.dim - 1);
    const Point y = from_y.pole;
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < from_y.walk_count; ++i) {
        if (!from_y.kept[i]) continue;
        const double e = fundamental_solution(cfg, sub(x, from_y.exit(i)));
        sum += e;
        sum2 += e * e;
        ++n;
    }
    Estimate out;
    out.N = n;
    out.seed = from_y.seed;
    if (n == 0) {
        out.value = std::numeric_limits<double>::quiet_NaN();
        out.stderr_ = kInf;
        return out;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = n > 1 ? std::max(0.0, (sum2 - sum * mean) / static_cast<double>(n - 1)) : 0.0;
    out.value = fundamental_solution(cfg, sub(x, y)) - mean;
    out.stderr_ = std::sqrt(var / static_cast<double>(n));
    return out;
}

Estimate green_estimate(const Domain& dom, PointView x, PointView y, std::size_t N, std::uint64_t seed,
                        const WalkParams& params) {
    if (distance(x, y) < 1e-9 * dom.scale()) throw Error(ErrorCode::SingularPair, "x and y coincide");
    return green_from_exits(x, sample_exits(dom, y, N, seed, params));
}

Estimate rho(const Domain& dom, PointView x0, std::size_t sphere_samples, std::size_t N_per_sample,
             std::uint64_t seed, const WalkParams& params) {
    const double d = -dom.sdf(x0);
    if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "x0 must be interior");
    if (sphere_samples == 0) throw Error(ErrorCode::InvalidArgument, "need sphere samples");
    const Point c(x0.begin(), x0.end());
    const auto ys = quasi_sphere(c, d / 4.0, sphere_samples, seed);
    Estimate out;
    out.seed = seed;
    double var = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j) {
        const Estimate g = green_estimate(dom, x0, ys[j], N_per_sample, derive_seed(seed, j), params);
        out.value += g.value;
        var += g.stderr_ * g.stderr_;
        out.N += g.N;
    }
    const double m = static_cast<double>(ys.size());
    out.value /= m;
    out.stderr_ = std::sqrt(var) / m;
    return out;
}

std::vector<Point> interior_samples(const Domain& dom, const Ball& ball, std::size_t count, std::uint64_t seed) {
    std::vector<Point> out;
    const std::size_t budget = 64 * count + 64;
    for (const Point& p : quasi_ball(ball.center, ball.radius, budget, seed)) {
        if (out.size() == count) break;
        if (dom.sdf(p) < 0.0) out.push_back(p);
    }
    return out;
}

BourgainResult bourgain_check(const Domain& dom, const PointMeasure& mu_boundary, PointView xi, double r,
                              double delta, std::span<const Point> poles, std::size_t N, std::uint64_t seed,
                              const WalkParams& params) {
    BourgainResult out;
    const Point c(xi.begin(), xi.end());
    const int n = dom.dim() - 1;
    out.mu_delta_ball = mass(mu_boundary, Ball{c, delta * r});
    if (out.mu_delta_ball <= 0.0) {
        out.vacuous = true;
        out.worst = kInf;
        return out;
    }
    const double factor = std::pow(delta * r, n) / out.mu_delta_ball;
    out.worst = kInf;
    for (std::size_t j = 0; j < poles.size(); ++j) {
        const ExitDistribution dist = sample_exits(dom, poles[j], N, derive_seed(seed, j), params);
        const double w = fraction_in(dist, Ball{c, r});
        out.ratios.push_back(w * factor);
        out.stderrs.push_back(binomial_se(w, dist.valid()) * factor);
        out.worst = std::min(out.worst, w * factor);
    }
    return out;
}

GreenOmegaResult green_omega_relation(const Domain& dom, const Ball& B, PointView x_B,
                                      std::span<const Point> xs, std::size_t N, std::uint64_t seed,
                                      const WalkParams& params, std::size_t rho_samples) {
    GreenOmegaResult out;
    out.negative_control = dom.name() == "slit_disk";
    const ExitDistribution base = sample_exits(dom, x_B, N, derive_seed(seed, 0), params);
    out.omega_xB = fraction_in(base, B);
    const double omega_xB_se = binomial_se(out.omega_xB, base.valid());
    const std::size_t per_sample = std::max<std::size_t>(1000, N / std::max<std::size_t>(1, rho_samples));
    const Estimate rh = rho(dom, x_B, rho_samples, per_sample, derive_seed(seed, 1), params);
    out.rho_xB = rh.value;

    double lo = kInf, hi = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const ExitDistribution dist = sample_exits(dom, xs[j], N, derive_seed(seed, j + 2), params);
        const double w = fraction_in(dist, B);
        const Estimate g = green_from_exits(xs[j], base);
        const double ratio = w * rh.value / (out.omega_xB * g.value);
        const double r2 = std::pow(rel(binomial_se(w, dist.valid()), w), 2) +
                          std::pow(rel(omega_xB_se, out.omega_xB), 2) + std::pow(rel(rh.stderr_, rh.value), 2) +
                          std::pow(rel(g.stderr_, g.value), 2);
        out.ratio.push_back(ratio);
        out.stderrs.push_back(std::abs(ratio) * std::sqrt(r2));
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    out.spread = xs.empty() ? 1.0 : (lo > 0.0 ? hi / lo : kInf);
    return out;
}

ChangeOfPoleResult change_of_pole(const Domain& dom, const Ball& B, const Targets& pieces, PointView p1,
                                  PointView p2, double c0, std::size_t N, std::uint64_t seed,
                                  const WalkParams& params) {
    for (PointView p : {p1, p2})
        if (distance(p, B.center) - B.radius < B.radius / c0)
            throw Error(ErrorCode::PreconditionFailed, "pole closer than r(B)/c0 to B");

    // Common random numbers: both poles replay the same streams.
    const HarmonicMeasure h1 = harmonic_measure(dom, p1, pieces, N, seed, params);
    const HarmonicMeasure h2 = harmonic_measure(dom, p2, pieces, N, seed, params);
    ChangeOfPoleResult out;
    double n1 = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < pieces.count; ++j) {
        n1 += static_cast<double>(h1.counts[j]);
        n2 += static_cast<double>(h2.counts[j]);
    }
    out.omega1_B = h1.valid ? n1 / static_cast<double>(h1.valid) : 0.0;
    out.omega2_B = h2.valid ? n2 / static_cast<double>(h2.valid) : 0.0;

    // Merge runs of pieces until each group has at least 30 combined exits.
    constexpr std::size_t kMinExits = 30;
    std::vector<std::vector<int>> groups;
    std::vector<std::pair<double, double>> counts;
    std::vector<int> current;
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < pieces.count; ++j) {
        current.push_back(static_cast<int>(j));
        a += static_cast<double>(h1.counts[j]);
        b += static_cast<double>(h2.counts[j]);
        if (a + b >= kMinExits) {
            groups.push_back(current);
            counts.emplace_back(a, b);
            current.clear();
            a = b = 0.0;
        }
    }
    if (!current.empty()) {
        if (groups.empty()) {
            groups.push_back(current);
            counts.emplace_back(a, b);
        } else {
            groups.back().insert(groups.back().end(), current.begin(), current.end());
            counts.back().first += a;
            counts.back().second += b;
        }
    }
    out.groups = groups;
    out.merged = pieces.count - groups.size();

    out.quotient = 1.0;
    for (const auto& [c1, c2] : counts) {
        const double r1 = n1 > 0.0 ? c1 / n1 : 0.0;
        const double r2 = n2 > 0.0 ? c2 / n2 : 0.0;
        out.ratio1.push_back(r1);
        out.ratio2.push_back(r2);
        const double q = std::min(r1, r2) > 0.0 ? std::max(r1, r2) / std::min(r1, r2) : (r1 == r2 ? 1.0 : kInf);
        if (q >= out.quotient) {
            out.quotient = q;
            out.log_stderr = (c1 > 0.0 && c2 > 0.0) ? std::sqrt(1.0 / c1 + 1.0 / c2) : kInf;
        }
    }
    return out;
}

HarnackResult boundary_harnack_check(const Domain& dom, PointView xi, double r, double A1,
                                     const HarnackFunction& u, const HarnackFunction& v,
                                     std::span<const Point> probes, std::size_t N, std::uint64_t seed,
                                     const WalkParams& params) {
    const Ball window{Point(xi.begin(), xi.end()), A1 * r};
    for (const HarnackFunction* f : {&u, &v}) {
        if (f->kind == HarnackFunction::Kind::HarmonicMeasureOfBall) {
            if (distance(f->ball.center, window.center) <= f->ball.radius + window.radius)
                throw Error(ErrorCode::PreconditionFailed, "B* meets B(xi, A1 r)");
        } else if (!(distance(f->pole, window.center) > window.radius)) {
            throw Error(ErrorCode::PreconditionFailed, "Green pole lies in B(xi, A1 r)");
        }
    }
    auto eval = [](const HarnackFunction& f, const ExitDistribution& dist) {
        if (f.kind == HarnackFunction::Kind::HarmonicMeasureOfBall) return fraction_in(dist, f.ball);
        return green_from_exits(f.pole, dist).value;
    };
    HarnackResult out;
    double lo = kInf, hi = 0.0;
    for (std::size_t j = 0; j < probes.size(); ++j) {
        const ExitDistribution dist = sample_exits(dom, probes[j], N, derive_seed(seed, j), params);
        const double uj = eval(u, dist);
        const double vj = u == v ? uj : eval(v, dist);
        const double ratio = uj == vj ? 1.0 : (vj != 0.0 ? uj / vj : kInf);
        out.u.push_back(uj);
        out.v.push_back(vj);
        out.ratios.push_back(ratio);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    out.oscillation = probes.empty() ? 1.0 : (lo > 0.0 ? hi / lo : kInf);
    return out;
}

}  // namespace hmlab
