#include "hmlab/measure.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hmlab/error.h"

namespace hmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Distances from atom i to every atom (itself included), sorted ascending,
// paired with the atom weight.
std::vector<std::pair<double, double>> sorted_distances(const PointMeasure& mu, std::size_t i) {
    std::vector<std::pair<double, double>> out(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j)
        out[j] = {distance(mu.point(i), mu.point(j)), mu.weight(j)};
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

PointMeasure::PointMeasure(int dim, int n) : dim_(dim), n_(n) { validate(); }

PointMeasure::PointMeasure(int dim, int n, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim), n_(n), coords_(std::move(coords)), weights_(std::move(weights)) {
    validate();
}

void PointMeasure::validate() const {
    if (dim_ < 2) throw Error(ErrorCode::InvalidArgument, "ambient dimension must be >= 2");
    if (n_ < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    if (coords_.size() != weights_.size() * static_cast<std::size_t>(dim_))
        throw Error(ErrorCode::InvalidArgument, "coordinate count does not match weights");
    for (double w : weights_)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    for (double c : coords_)
        if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "non-finite coordinate");
}

void PointMeasure::add(PointView p, double w) {
    if (p.size() != static_cast<std::size_t>(dim_))
        throw Error(ErrorCode::InvalidArgument, "point has wrong dimension");
    if (!(w >= 0.0) || !std::isfinite(w))
        throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    coords_.insert(coords_.end(), p.begin(), p.end());
    weights_.push_back(w);
}

double PointMeasure::total_mass() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
}

PointMeasure PointMeasure::restricted(std::span<const std::size_t> indices) const {
    PointMeasure out(dim_, n_);
    out.coords_.reserve(indices.size() * static_cast<std::size_t>(dim_));
    out.weights_.reserve(indices.size());
    for (std::size_t i : indices) out.add(point(i), weight(i));
    return out;
}

PointMeasure PointMeasure::with_weights(std::vector<double> weights) const {
    return PointMeasure(dim_, n_, coords_, std::move(weights));
}

BallIndex::BallIndex(const PointMeasure& mu, double cell) : mu_(&mu), cell_(cell) {
    const std::size_t d = static_cast<std::size_t>(mu.dim());
    lo_.assign(d, 0.0);
    extent_.assign(d, 1);
    if (mu.empty()) {
        start_ = {0, 0};
        return;
    }
    std::vector<double> hi(d, -kInf);
    lo_.assign(d, kInf);
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t k = 0; k < d; ++k) {
            lo_[k] = std::min(lo_[k], mu.point(i)[k]);
            hi[k] = std::max(hi[k], mu.point(i)[k]);
        }
    // Cap the bucket count at a few per atom.
    const double cap = 4.0 * static_cast<double>(mu.size()) + 16.0;
    for (;;) {
        double total = 1.0;
        for (std::size_t k = 0; k < d; ++k) total *= std::floor((hi[k] - lo_[k]) / cell_) + 1.0;
        if (cell_ > 0.0 && total <= cap) break;
        cell_ = cell_ > 0.0 ? cell_ * 2.0 : 1.0;
    }
    for (std::size_t k = 0; k < d; ++k)
        extent_[k] = static_cast<long>(std::floor((hi[k] - lo_[k]) / cell_)) + 1;

    std::size_t buckets = 1;
    for (long e : extent_) buckets *= static_cast<std::size_t>(e);
    std::vector<std::size_t> key(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        std::size_t k = 0;
        for (std::size_t a = 0; a < d; ++a) {
            long c = static_cast<long>(std::floor((mu.point(i)[a] - lo_[a]) / cell_));
            c = std::clamp(c, 0L, extent_[a] - 1);
            k = k * static_cast<std::size_t>(extent_[a]) + static_cast<std::size_t>(c);
        }
        key[i] = k;
    }
    start_.assign(buckets + 1, 0);
    for (std::size_t k : key) ++start_[k + 1];
    for (std::size_t b = 0; b < buckets; ++b) start_[b + 1] += start_[b];
    order_.resize(mu.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < mu.size(); ++i) order_[fill[key[i]]++] = i;
}

std::vector<std::size_t> BallIndex::query(PointView center, double radius) const {
    const PointMeasure& mu = *mu_;
    std::vector<std::size_t> out;
    if (mu.empty() || radius < 0.0) return out;
    const std::size_t d = lo_.size();
    std::vector<long> a(d), b(d);
    double span = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
        a[k] = std::max(0L, static_cast<long>(std::floor((center[k] - radius - lo_[k]) / cell_)));
        b[k] = std::min(extent_[k] - 1,
                        static_cast<long>(std::floor((center[k] + radius - lo_[k]) / cell_)));
        if (a[k] > b[k]) return out;
        span *= static_cast<double>(b[k] - a[k] + 1);
    }
    if (span >= static_cast<double>(mu.size())) {
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (distance(center, mu.point(i)) <= radius) out.push_back(i);
        return out;
    }
    std::vector<long> c(a);
    for (;;) {
        std::size_t key = 0;
        for (std::size_t k = 0; k < d; ++k)
            key = key * static_cast<std::size_t>(extent_[k]) + static_cast<std::size_t>(c[k]);
        for (std::size_t p = start_[key]; p < start_[key + 1]; ++p) {
            const std::size_t i = order_[p];
            if (distance(center, mu.point(i)) <= radius) out.push_back(i);
        }
        std::size_t k = d;
        while (k > 0) {
            --k;
            if (++c[k] <= b[k]) break;
            c[k] = a[k];
            if (k == 0) {
                std::sort(out.begin(), out.end());
                return out;
            }
        }
    }
}

double BallIndex::mass(PointView center, double radius) const {
    double s = 0.0;
    for (std::size_t i : query(center, radius)) s += mu_->weight(i);
    return s;
}

double mass(const PointMeasure& mu, const Ball& ball) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (ball.contains(mu.point(i))) s += mu.weight(i);
    return s;
}

double mass(const PointMeasure& mu, std::span<const std::size_t> indices) {
    double s = 0.0;
    for (std::size_t i : indices) s += mu.weight(i);
    return s;
}

std::vector<std::size_t> members(const PointMeasure& mu, const Ball& ball) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (ball.contains(mu.point(i))) out.push_back(i);
    return out;
}

double density(const PointMeasure& mu, const Ball& ball) {
    if (!(ball.radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
    return mass(mu, ball) / std::pow(2.0 * ball.radius, mu.n());
}

double resolution_scale(const PointMeasure& mu) {
    double best = kInf;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = i + 1; j < mu.size(); ++j) {
            const double d = distance(mu.point(i), mu.point(j));
            if (d > 0.0) best = std::min(best, d);
        }
    return best;
}

GrowthResult growth_constant(const PointMeasure& mu, std::span<const Ball> probes) {
    GrowthResult out;
    const double res = resolution_scale(mu);
    for (const Ball& b : probes) {
        const double m = mass(mu, b);
        if (b.radius <= 0.0) {
            if (m > 0.0) out.infinite = true;
            continue;
        }
        if (b.radius < res) out.below_resolution = true;
        out.value = std::max(out.value, m / std::pow(b.radius, mu.n()));
    }
    if (out.infinite) out.value = kInf;
    return out;
}

GrowthResult growth_constant(const PointMeasure& mu, std::optional<double> resolution) {
    GrowthResult out;
    if (mu.empty()) return out;
    const double res = resolution.value_or(resolution_scale(mu));
    if (res <= 0.0) {
        for (double w : mu.weights())
            if (w > 0.0) {
                out.infinite = true;
                out.value = kInf;
            }
        if (out.infinite) return out;
    }
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto dist = sorted_distances(mu, i);
        double cum = 0.0;
        for (std::size_t j = 0; j < dist.size(); ++j) {
            cum += dist[j].second;
            // Only evaluate once all atoms at this distance are included.
            if (j + 1 < dist.size() && dist[j + 1].first == dist[j].first) continue;
            const double r = dist[j].first;
            if (r <= 0.0 || r < res) continue;
            out.value = std::max(out.value, cum / std::pow(r, mu.n()));
        }
    }
    return out;
}

bool is_doubling_ball(const PointMeasure& mu, const Ball& ball, double a, double b) {
    const double inner = mass(mu, ball);
    const double outer = mass(mu, ball.scaled(a));
    if (inner == 0.0) return outer == 0.0;
    return outer <= b * inner;
}

std::vector<double> default_t_grid() {
    std::vector<double> t;
    for (int k = 1; k <= 10; ++k) t.push_back(std::ldexp(1.0, -k));
    return t;
}

std::vector<std::pair<double, double>> thin_boundary_profile(const PointMeasure& mu,
                                                             const Ball& ball,
                                                             std::span<const double> t_grid) {
    std::vector<std::pair<double, double>> out;
    std::vector<double> shell_dist;
    std::vector<double> shell_w;
    double m2 = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double r = distance(ball.center, mu.point(i));
        if (r > 2.0 * ball.radius) continue;
        m2 += mu.weight(i);
        shell_dist.push_back(std::abs(r - ball.radius));
        shell_w.push_back(mu.weight(i));
    }
    if (m2 <= 0.0) return out;
    for (double t : t_grid) {
        double s = 0.0;
        for (std::size_t j = 0; j < shell_dist.size(); ++j)
            if (shell_dist[j] <= t * ball.radius) s += shell_w[j];
        out.emplace_back(t, s / (t * m2));
    }
    return out;
}

ThinBall find_thin_boundary_ball(const PointMeasure& mu, const Ball& inner, double s_lo,
                                 double s_hi, double C1) {
    if (!(s_lo < s_hi) || !(s_lo > 0.0))
        throw Error(ErrorCode::InvalidArgument, "scale window must satisfy 0 < s_lo < s_hi");
    const auto t_grid = default_t_grid();
    auto worst = [&](double radius) {
        double w = 0.0;
        for (const auto& [t, ratio] : thin_boundary_profile(mu, Ball{inner.center, radius}, t_grid))
            w = std::max(w, ratio);
        return w;
    };
    const double lo = s_lo * inner.radius;
    const double hi = s_hi * inner.radius;
    constexpr int kGrid = 64;
    // The window midpoint goes first so that ties resolve to it.
    std::vector<double> radii{0.5 * (lo + hi)};
    for (int i = 0; i < kGrid; ++i) radii.push_back(lo + (hi - lo) * i / (kGrid - 1));
    ThinBall best{Ball{inner.center, radii[0]}, kInf};
    for (double r : radii) {
        const double w = worst(r);
        if (w < best.worst_ratio) best = ThinBall{Ball{inner.center, r}, w};
    }
    if (best.worst_ratio > C1)
        throw Error(ErrorCode::NoThinBall, "best worst-case shell ratio " +
                                               std::to_string(best.worst_ratio) + " exceeds C1");
    return best;
}

AdRegularity ad_regularity(const PointMeasure& mu, double r_min, double r_max) {
    AdRegularity out;
    if (mu.empty() || !(r_min > 0.0) || !(r_min <= r_max) || !std::isfinite(r_max)) {
        out.degenerate = true;
        return out;
    }
    out.lower = kInf;
    const int n = mu.n();
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto dist = sorted_distances(mu, i);
        auto mass_le = [&](double r) {
            double s = 0.0;
            for (const auto& [d, w] : dist)
                if (d <= r) s += w;
            return s;
        };
        out.upper = std::max(out.upper, mass_le(r_min) / std::pow(r_min, n));
        out.lower = std::min(out.lower, mass_le(r_max) / std::pow(r_max, n));
        double below = 0.0;  // mass strictly inside the current breakpoint
        for (std::size_t j = 0; j < dist.size();) {
            const double d = dist[j].first;
            double at = 0.0;
            std::size_t k = j;
            for (; k < dist.size() && dist[k].first == d; ++k) at += dist[k].second;
            if (d > r_min && d <= r_max) {
                out.lower = std::min(out.lower, below / std::pow(d, n));
                out.upper = std::max(out.upper, (below + at) / std::pow(d, n));
            }
            below += at;
            j = k;
        }
    }
    return out;
}

AdRegularity ad_regularity(const PointMeasure& mu, std::span<const Ball> probes) {
    AdRegularity out;
    if (probes.empty()) {
        out.degenerate = true;
        return out;
    }
    out.lower = kInf;
    for (const Ball& b : probes) {
        if (!(b.radius > 0.0)) {
            out.degenerate = true;
            continue;
        }
        const double v = mass(mu, b) / std::pow(b.radius, mu.n());
        out.lower = std::min(out.lower, v);
        out.upper = std::max(out.upper, v);
    }
    if (out.lower == kInf) out.lower = 0.0;
    return out;
}

namespace generators {

PointMeasure segment(std::size_t N, const Point& a, const Point& b) {
    const int d = static_cast<int>(a.size());
    PointMeasure mu(d, d - 1);
    const double w = distance(a, b) / static_cast<double>(N);
    Point p(a.size());
    for (std::size_t i = 0; i < N; ++i) {
        const double s = (static_cast<double>(i) + 0.5) / static_cast<double>(N);
        for (std::size_t k = 0; k < a.size(); ++k) p[k] = a[k] + s * (b[k] - a[k]);
        mu.add(p, w);
    }
    return mu;
}

PointMeasure unit_segment(std::size_t N) { return segment(N, {0.0, 0.0}, {1.0, 0.0}); }

PointMeasure circle(std::size_t N, const Point& center, double radius) {
    PointMeasure mu(2, 1);
    const double w = 2.0 * std::numbers::pi * radius / static_cast<double>(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double th = 2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(N);
        mu.add(Point{center[0] + radius * std::cos(th), center[1] + radius * std::sin(th)}, w);
    }
    return mu;
}

PointMeasure square_boundary(std::size_t N, double h) {
    PointMeasure mu(2, 1);
    const double per = 8.0 * h;
    const double w = per / static_cast<double>(N);
    for (std::size_t i = 0; i < N; ++i) {
        double s = (static_cast<double>(i) + 0.5) * w;
        const int side = std::min(3, static_cast<int>(s / (2.0 * h)));
        s -= side * 2.0 * h;
        Point p(2);
        switch (side) {
            case 0: p = {-h + s, -h}; break;
            case 1: p = {h, -h + s}; break;
            case 2: p = {h - s, h}; break;
            default: p = {-h, h - s}; break;
        }
        mu.add(p, w);
    }
    return mu;
}

PointMeasure two_cluster(std::size_t N, double width, double separation) {
    PointMeasure mu(2, 1);
    const std::size_t half = N / 2;
    const double w = 1.0 / static_cast<double>(2 * half);
    for (int c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < half; ++i) {
            const double s = (static_cast<double>(i) + 0.5) / static_cast<double>(half) - 0.5;
            mu.add(Point{c * separation + s * width, 0.0}, w);
        }
    return mu;
}

PointMeasure sphere_shell(std::size_t N, double radius) {
    PointMeasure mu(3, 2);
    const double w = 4.0 * std::numbers::pi * radius * radius / static_cast<double>(N);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < N; ++i) {
        const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(N);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = golden * static_cast<double>(i);
        mu.add(Point{radius * rho * std::cos(th), radius * rho * std::sin(th), radius * z}, w);
    }
    return mu;
}

PointMeasure parallel_segments(std::size_t N, double gap) {
    PointMeasure a = segment(N / 2, {0.0, 0.0}, {1.0, 0.0});
    const PointMeasure b = segment(N - N / 2, {0.0, gap}, {1.0, gap});
    for (std::size_t i = 0; i < b.size(); ++i) a.add(b.point(i), b.weight(i));
    return a;
}

PointMeasure segment_plus_cluster(std::size_t N, std::size_t cluster_atoms, double cluster_width,
                                  double cluster_mass) {
    PointMeasure mu = unit_segment(N);
    const double w = cluster_mass / static_cast<double>(cluster_atoms);
    for (std::size_t j = 0; j < cluster_atoms; ++j) {
        const double s = cluster_atoms > 1
                             ? static_cast<double>(j) / static_cast<double>(cluster_atoms - 1) - 0.5
                             : 0.0;
        mu.add(Point{0.5 + s * cluster_width, cluster_width}, w);
    }
    return mu;
}

}  // namespace generators

}  // namespace hmlab
