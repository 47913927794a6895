#include "hmlab/riesz.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>

#include "hmlab/error.h"
#include "hmlab/parallel.h"

namespace hmlab {

namespace {

constexpr double kTieTol = 1e-9;

void check_dim(const RieszConfig& cfg, std::size_t d) {
    if (d != static_cast<std::size_t>(cfg.ambient_dim()))
        throw Error(ErrorCode::InvalidArgument, "point dimension must be n + 1");
}

double weight_factor(std::span<const double> f, std::size_t i) { return f.empty() ? 1.0 : f[i]; }

// Adds K(x - y) * c into acc.
void accumulate_kernel(int n, PointView x, PointView y, double c, Point& acc) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) r2 += (x[k] - y[k]) * (x[k] - y[k]);
    const double r = std::sqrt(r2);
    const double scale = c / std::pow(r, n + 1);
    for (std::size_t k = 0; k < x.size(); ++k) acc[k] += (x[k] - y[k]) * scale;
}

}  // namespace

RieszConfig RieszConfig::standard(int n) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    RieszConfig cfg;
    cfg.n = n;
    cfg.c1 = 1.0 / (2.0 * std::numbers::pi);
    if (n >= 2) {
        const double m = n + 1;
        const double sphere = 2.0 * std::pow(std::numbers::pi, m / 2.0) / std::tgamma(m / 2.0);
        cfg.cn = 1.0 / ((n - 1) * sphere);
    }
    return cfg;
}

double fundamental_solution(const RieszConfig& cfg, PointView x) {
    check_dim(cfg, x.size());
    const double r = norm(x);
    if (r == 0.0) throw Error(ErrorCode::SingularPoint, "fundamental solution at the origin");
    if (cfg.n == 1) return -cfg.c1 * std::log(r);
    return cfg.cn * std::pow(r, 1 - cfg.n);
}

Point riesz_kernel(const RieszConfig& cfg, PointView x) {
    check_dim(cfg, x.size());
    const double r = norm(x);
    if (r == 0.0) throw Error(ErrorCode::SingularPoint, "Riesz kernel at the origin");
    return scale(x, 1.0 / std::pow(r, cfg.n + 1));
}

Point truncated_riesz(const RieszConfig& cfg, const PointMeasure& nu, std::span<const double> f,
                      PointView x, double eps) {
    check_dim(cfg, x.size());
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    Point acc(x.size(), 0.0);
    for (std::size_t i = 0; i < nu.size(); ++i) {
        if (!(distance(x, nu.point(i)) > eps)) continue;
        accumulate_kernel(cfg.n, x, nu.point(i), weight_factor(f, i) * nu.weight(i), acc);
    }
    return acc;
}

Point double_truncation(const RieszConfig& cfg, const PointMeasure& nu, std::span<const double> f,
                        PointView x, double eps1, double eps2) {
    if (eps1 > eps2) throw Error(ErrorCode::BadTruncationOrder, "eps1 must not exceed eps2");
    return sub(truncated_riesz(cfg, nu, f, x, eps1), truncated_riesz(cfg, nu, f, x, eps2));
}

double maximal_riesz(const RieszConfig& cfg, const PointMeasure& nu, std::span<const double> f,
                     PointView x, double delta) {
    check_dim(cfg, x.size());
    std::vector<std::pair<double, std::size_t>> by_dist;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const double d = distance(x, nu.point(i));
        if (d > delta) by_dist.emplace_back(d, i);
    }
    std::sort(by_dist.begin(), by_dist.end());
    // Walk outward; after the group at distance d_j is removed the running
    // sum is R_{d_j}. Accumulating from the far end keeps each partial sum
    // an exact suffix in a fixed order.
    const std::size_t m = by_dist.size();
    std::vector<Point> suffix(m + 1, Point(x.size(), 0.0));
    for (std::size_t j = m; j-- > 0;) {
        suffix[j] = suffix[j + 1];
        const std::size_t i = by_dist[j].second;
        accumulate_kernel(cfg.n, x, nu.point(i), weight_factor(f, i) * nu.weight(i), suffix[j]);
    }
    // Distances within a relative 1e-9 count as one group, so rounding in
    // symmetric configurations does not open spurious one-sided windows.
    double best = norm(suffix[0]);  // eps just above delta
    for (std::size_t j = 0; j < m; ++j) {
        if (j + 1 < m && by_dist[j + 1].first <= by_dist[j].first * (1.0 + kTieTol)) continue;
        best = std::max(best, norm(suffix[j + 1]));  // eps = d_j
    }
    return best;
}

MaximalDensity maximal_density(const RieszConfig& cfg, const PointMeasure& nu, PointView x,
                               double delta) {
    check_dim(cfg, x.size());
    std::vector<std::pair<double, double>> by_dist;
    for (std::size_t i = 0; i < nu.size(); ++i)
        by_dist.emplace_back(distance(x, nu.point(i)), std::abs(nu.weight(i)));
    std::sort(by_dist.begin(), by_dist.end());

    MaximalDensity out;
    double cum = 0.0;
    std::size_t j = 0;
    for (; j < by_dist.size() && by_dist[j].first <= delta; ++j) cum += by_dist[j].second;
    if (cum > 0.0) {
        out.value = delta > 0.0 ? cum / std::pow(delta, cfg.n) : std::numeric_limits<double>::infinity();
        out.open_endpoint = true;
    }
    while (j < by_dist.size()) {
        const double d = by_dist[j].first;
        for (; j < by_dist.size() && by_dist[j].first == d; ++j) cum += by_dist[j].second;
        const double v = cum / std::pow(d, cfg.n);
        if (v > out.value) {
            out.value = v;
            out.open_endpoint = false;
        }
    }
    return out;
}

std::vector<double> truncated_riesz_matrix(const RieszConfig& cfg, const PointMeasure& mu,
                                           std::span<const std::size_t> subset, double eps) {
    const std::size_t m = subset.size();
    const std::size_t d = static_cast<std::size_t>(cfg.ambient_dim());
    if (static_cast<std::size_t>(mu.dim()) != d)
        throw Error(ErrorCode::InvalidArgument, "measure dimension must be n + 1");
    std::vector<double> A(d * m * m, 0.0);
    parallel_for(m, [&](std::size_t a) {
        const std::size_t i = subset[a];
        const double wi = std::sqrt(mu.weight(i));
        for (std::size_t b = 0; b < m; ++b) {
            const std::size_t j = subset[b];
            if (!(distance(mu.point(i), mu.point(j)) > eps)) continue;
            Point acc(d, 0.0);
            accumulate_kernel(cfg.n, mu.point(i), mu.point(j), wi * std::sqrt(mu.weight(j)), acc);
            for (std::size_t k = 0; k < d; ++k) A[(a * d + k) * m + b] = acc[k];
        }
    });
    return A;
}

OperatorNorm operator_norm_l2(const RieszConfig& cfg, const PointMeasure& mu,
                              std::span<const std::size_t> subset, double eps) {
    if (subset.empty()) throw Error(ErrorCode::InvalidArgument, "subset must be nonempty");
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    const std::size_t m = subset.size();
    const std::size_t d = static_cast<std::size_t>(cfg.ambient_dim());
    const std::size_t rows = d * m;
    const std::vector<double> A = truncated_riesz_matrix(cfg, mu, subset, eps);

    // Deterministic, generic start vector.
    std::vector<double> v(m);
    std::uint64_t state = 0x243f6a8885a308d3ULL;
    for (double& x : v) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        x = 1.0 + static_cast<double>(state >> 11) * 0x1.0p-53;
    }
    auto normalize = [](std::vector<double>& x) {
        double s = 0.0;
        for (double t : x) s += t * t;
        s = std::sqrt(s);
        if (s > 0.0)
            for (double& t : x) t /= s;
        return s;
    };
    normalize(v);

    std::vector<double> u(rows), w(m);
    constexpr std::size_t kMaxIter = 10000;
    constexpr double kTol = 1e-8;
    OperatorNorm out;
    out.converged = false;
    double prev = 0.0;
    for (std::size_t it = 1; it <= kMaxIter; ++it) {
        parallel_for(rows, [&](std::size_t r) {
            const double* row = A.data() + r * m;
            double s = 0.0;
            for (std::size_t c = 0; c < m; ++c) s += row[c] * v[c];
            u[r] = s;
        });
        // The kernel is odd and the cutoff symmetric, so block (a, c) of A
        // is minus block (c, a); Aᵀu can then be read along rows.
        parallel_for(m, [&](std::size_t c) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double* row = A.data() + (c * d + k) * m;
                for (std::size_t a = 0; a < m; ++a) s -= row[a] * u[a * d + k];
            }
            w[c] = s;
        });
        const double lambda = normalize(w);  // |AᵀA v| with |v| = 1
        out.iterations = it;
        out.norm = std::sqrt(lambda);
        if (lambda == 0.0) {
            out.converged = true;
            break;
        }
        v.swap(w);
        if (std::abs(lambda - prev) <= kTol * lambda) {
            out.converged = true;
            break;
        }
        prev = lambda;
    }
    return out;
}

OperatorNorm operator_norm_l2(const RieszConfig& cfg, const PointMeasure& mu, double eps) {
    std::vector<std::size_t> all(mu.size());
    std::iota(all.begin(), all.end(), 0);
    return operator_norm_l2(cfg, mu, all, eps);
}

}  // namespace hmlab
