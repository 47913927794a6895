#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "hmlab/error.h"
#include "hmlab/riesz.h"

using namespace hmlab;

namespace {

const RieszConfig R1 = RieszConfig::standard(1);

PointMeasure random_atoms(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PointMeasure mu(2, 1);
    std::vector<double> c, w;
    for (std::size_t i = 0; i < n; ++i) {
        c.push_back(u(rng));
        c.push_back(u(rng));
        w.push_back(std::abs(u(rng)) + 0.05);
    }
    return PointMeasure(2, 1, c, w);
}

// Direct summation written out independently of the library.
Point direct_sum(const PointMeasure& nu, PointView x, double eps) {
    Point acc{0.0, 0.0};
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const double dx = x[0] - nu.point(i)[0], dy = x[1] - nu.point(i)[1];
        const double r = std::sqrt(dx * dx + dy * dy);
        if (!(r > eps)) continue;
        const double s = (1.0 * nu.weight(i)) / std::pow(r, 2);
        acc[0] += dx * s;
        acc[1] += dy * s;
    }
    return acc;
}

}  // namespace

TEST_CASE("fundamental solution") {
    CHECK(fundamental_solution(R1, Point{1, 0}) == 0.0);
    RieszConfig r2 = RieszConfig::standard(2);
    r2.cn = 1.0;
    CHECK(fundamental_solution(r2, Point{2, 0, 0}) == doctest::Approx(0.5));
    const Point x{0.3, -1.7};
    CHECK(fundamental_solution(R1, scale(x, 1.0 / std::numbers::e)) - fundamental_solution(R1, x) ==
          doctest::Approx(R1.c1));
    CHECK_THROWS_AS(fundamental_solution(R1, Point{0, 0}), Error);
    CHECK(RieszConfig::standard(2).cn == doctest::Approx(1.0 / (4 * std::numbers::pi)));
}

TEST_CASE("Riesz kernel") {
    CHECK(riesz_kernel(R1, Point{1, 0}) == Point{1, 0});
    CHECK(riesz_kernel(RieszConfig::standard(2), Point{0, 1, 0}) == Point{0, 1, 0});
    const Point k = riesz_kernel(R1, Point{2, 0});
    CHECK(k[0] == doctest::Approx(0.5));
    CHECK(k[1] == 0.0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    for (int t = 0; t < 20; ++t) {
        const Point x{g(rng), g(rng)};
        const Point a = riesz_kernel(R1, x), b = riesz_kernel(R1, scale(x, -1.0));
        CHECK(a[0] == -b[0]);
        CHECK(a[1] == -b[1]);
    }
    CHECK_THROWS_AS(riesz_kernel(R1, Point{0, 0}), Error);
}

TEST_CASE("truncated transform") {
    PointMeasure pair(2, 1);
    pair.add(Point{1, 0}, 1);
    pair.add(Point{-1, 0}, 1);
    CHECK(truncated_riesz(R1, pair, {}, Point{0, 0}, 0.5) == Point{0, 0});

    PointMeasure one(2, 1);
    one.add(Point{1, 0}, 1);
    CHECK(truncated_riesz(R1, one, {}, Point{0, 0}, 0.5) == Point{-1, 0});
    CHECK(truncated_riesz(R1, one, {}, Point{0, 0}, 1.0) == Point{0, 0});  // strict cutoff

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const PointMeasure nu = random_atoms(rng, 5);
        const Point x{u(rng), u(rng)};
        const double eps = 0.05 + 0.5 * std::abs(u(rng));
        CHECK(truncated_riesz(R1, nu, {}, x, eps) == direct_sum(nu, x, eps));
    }
}

TEST_CASE("double truncation") {
    std::mt19937_64 rng(8);
    const PointMeasure nu = random_atoms(rng, 30);
    const Point x{0.1, 0.2};
    CHECK(double_truncation(R1, nu, {}, x, 0.3, 0.3) == Point{0, 0});
    PointMeasure one(2, 1);
    one.add(Point{1, 0}, 1);
    CHECK(double_truncation(R1, one, {}, Point{0, 0}, 0.5, 1.5) == Point{-1, 0});
    for (double e1 : {0.05, 0.2, 0.4})
        for (double e2 : {0.5, 0.9}) {
            const Point d = double_truncation(R1, nu, {}, x, e1, e2);
            const Point a = truncated_riesz(R1, nu, {}, x, e1), b = truncated_riesz(R1, nu, {}, x, e2);
            CHECK(d[0] == a[0] - b[0]);
            CHECK(d[1] == a[1] - b[1]);
            // Annulus oracle.
            Point ann{0, 0};
            for (std::size_t i = 0; i < nu.size(); ++i) {
                const double r = distance(x, nu.point(i));
                if (r > e1 && r <= e2) {
                    const Point k = riesz_kernel(R1, sub(x, nu.point(i)));
                    ann[0] += k[0] * nu.weight(i);
                    ann[1] += k[1] * nu.weight(i);
                }
            }
            CHECK(d[0] == doctest::Approx(ann[0]).epsilon(1e-10).scale(1.0));
            CHECK(d[1] == doctest::Approx(ann[1]).epsilon(1e-10).scale(1.0));
        }
    CHECK_THROWS_AS(double_truncation(R1, nu, {}, x, 0.5, 0.2), Error);
}

TEST_CASE("linearity in f") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const PointMeasure nu = random_atoms(rng, 40);
    std::vector<double> f(nu.size()), g(nu.size()), fg(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) {
        f[i] = u(rng);
        g[i] = u(rng);
        fg[i] = f[i] + g[i];
    }
    const Point x{0.0, 0.3};
    const Point a = truncated_riesz(R1, nu, f, x, 0.1), b = truncated_riesz(R1, nu, g, x, 0.1),
                c = truncated_riesz(R1, nu, fg, x, 0.1);
    CHECK(c[0] == doctest::Approx(a[0] + b[0]).epsilon(1e-12).scale(1.0));
    CHECK(c[1] == doctest::Approx(a[1] + b[1]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("two-atom antisymmetry") {
    PointMeasure pair(2, 1);
    pair.add(Point{0.2, 0.1}, 0.7);
    pair.add(Point{-0.4, 0.5}, 0.7);
    const Point a = truncated_riesz(R1, pair, {}, pair.point(0), 0.1);
    const Point b = truncated_riesz(R1, pair, {}, pair.point(1), 0.1);
    CHECK(a[0] == -b[0]);
    CHECK(a[1] == -b[1]);
}

TEST_CASE("maximal transform") {
    PointMeasure one(2, 1);
    one.add(Point{1, 0}, 1);
    CHECK(maximal_riesz(R1, one, {}, Point{0, 0}, 0.0) == doctest::Approx(1.0));
    PointMeasure pair(2, 1);
    pair.add(Point{1, 0}, 1);
    pair.add(Point{-1, 0}, 1);
    CHECK(maximal_riesz(R1, pair, {}, Point{0, 0}, 0.0) == 0.0);

    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        const PointMeasure nu = random_atoms(rng, 10);
        const Point x{u(rng), u(rng)};
        const double m0 = maximal_riesz(R1, nu, {}, x, 0.0);
        // Dense grid oracle on (0, 3].
        double grid = 0.0;
        for (int k = 1; k <= 100000; ++k) grid = std::max(grid, norm(direct_sum(nu, x, 3.0 * k / 100000)));
        CHECK(m0 >= grid - 1e-12);
        CHECK(m0 <= grid + 1e-9);
        double prev = m0;
        for (double d : {0.1, 0.3, 0.6, 1.0, 2.0}) {
            const double m = maximal_riesz(R1, nu, {}, x, d);
            CHECK(m <= prev);
            prev = m;
            for (double e : {0.05, 0.2, 0.7, 1.5}) CHECK(m0 >= norm(truncated_riesz(R1, nu, {}, x, e)) * (1 - 1e-12));
        }
    }
}

TEST_CASE("maximal density") {
    PointMeasure one(2, 1);
    one.add(Point{2, 0}, 1);
    const MaximalDensity a = maximal_density(R1, one, Point{0, 0}, 0.0);
    CHECK(a.value == doctest::Approx(0.5));
    CHECK(!a.open_endpoint);
    const MaximalDensity b = maximal_density(R1, one, Point{0, 0}, 5.0);
    CHECK(b.value == doctest::Approx(0.2));
    CHECK(b.open_endpoint);
    CHECK(std::isinf(maximal_density(R1, one, Point{2, 0}, 0.0).value));

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        const PointMeasure nu = random_atoms(rng, 10);
        const Point x{u(rng), u(rng)};
        double prev = 1e300;
        for (double d : {0.0, 0.1, 0.5, 1.0}) {
            const double m = maximal_density(R1, nu, x, d).value;
            CHECK(m <= prev);
            prev = m;
            double grid = 0.0;
            for (int k = 1; k <= 20000; ++k) {
                const double r = d + 4.0 * k / 20000;
                double mass = 0.0;
                for (std::size_t i = 0; i < nu.size(); ++i)
                    if (distance(x, nu.point(i)) <= r) mass += std::abs(nu.weight(i));
                grid = std::max(grid, mass / r);
            }
            CHECK(m >= grid - 1e-12);
        }
    }
}

TEST_CASE("operator norm") {
    PointMeasure one(2, 1);
    one.add(Point{0, 0}, 1);
    CHECK(operator_norm_l2(R1, one, 0.5).norm == 0.0);

    PointMeasure pair(2, 1);
    pair.add(Point{0, 0}, 1);
    pair.add(Point{1, 0}, 1);
    const OperatorNorm p = operator_norm_l2(R1, pair, 0.5);
    CHECK(p.converged);
    CHECK(p.norm == doctest::Approx(1.0));

    // Dense SVD oracle.
    std::mt19937_64 rng(14);
    const PointMeasure mu = random_atoms(rng, 60);
    std::vector<std::size_t> all(mu.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto A = truncated_riesz_matrix(R1, mu, all, 0.05);
    Eigen::MatrixXd M(2 * mu.size(), mu.size());
    for (std::size_t r = 0; r < 2 * mu.size(); ++r)
        for (std::size_t c = 0; c < mu.size(); ++c) M(r, c) = A[r * mu.size() + c];
    const double svd = Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
    const OperatorNorm on = operator_norm_l2(R1, mu, 0.05);
    CHECK(on.norm == doctest::Approx(svd).epsilon(1e-4));

    // Rigid motion.
    const double th = 1.1;
    std::vector<double> c;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        c.push_back(std::cos(th) * mu.point(i)[0] - std::sin(th) * mu.point(i)[1] + 3.0);
        c.push_back(std::sin(th) * mu.point(i)[0] + std::cos(th) * mu.point(i)[1] - 2.0);
    }
    CHECK(operator_norm_l2(R1, PointMeasure(2, 1, c, mu.weights()), 0.05).norm ==
          doctest::Approx(on.norm).epsilon(1e-6));
}
