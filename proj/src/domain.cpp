#include "hmlab/domain.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <variant>

#include "hmlab/error.h"
#include "hmlab/random.h"

namespace hmlab {

namespace {

constexpr double kPi = std::numbers::pi;

class BallShape final : public Shape {
public:
    explicit BallShape(int dim) : dim_(dim) {}
    double sdf(PointView x) const override { return norm(x) - 1.0; }
    Point project(PointView x) const override {
        const double r = norm(x);
        if (r == 0.0) {
            Point p(static_cast<std::size_t>(dim_), 0.0);
            p[0] = 1.0;
            return p;
        }
        return scale(x, 1.0 / r);
    }

private:
    int dim_;
};

class SquareShape final : public Shape {
public:
    double sdf(PointView x) const override {
        const double qx = std::abs(x[0]) - 1.0;
        const double qy = std::abs(x[1]) - 1.0;
        const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0);
        return std::sqrt(ox * ox + oy * oy) + std::min(std::max(qx, qy), 0.0);
    }
    Point project(PointView x) const override {
        Point p{std::clamp(x[0], -1.0, 1.0), std::clamp(x[1], -1.0, 1.0)};
        if (std::abs(x[0]) < 1.0 && std::abs(x[1]) < 1.0) {
            // Inside: push the coordinate closest to its face.
            if (1.0 - std::abs(x[0]) <= 1.0 - std::abs(x[1]))
                p[0] = x[0] >= 0.0 ? 1.0 : -1.0;
            else
                p[1] = x[1] >= 0.0 ? 1.0 : -1.0;
        }
        return p;
    }
};

struct Segment {
    Point a, b;
};

struct Arc {
    Point c;
    double radius;
    double theta0;
    double span;  // counterclockwise from theta0
};

using Piece = std::variant<Segment, Arc>;

Point nearest_on(const Segment& s, PointView x) {
    const double ex = s.b[0] - s.a[0], ey = s.b[1] - s.a[1];
    const double len2 = ex * ex + ey * ey;
    double t = len2 > 0.0 ? ((x[0] - s.a[0]) * ex + (x[1] - s.a[1]) * ey) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return Point{s.a[0] + t * ex, s.a[1] + t * ey};
}

Point nearest_on(const Arc& a, PointView x) {
    const double dx = x[0] - a.c[0], dy = x[1] - a.c[1];
    auto at = [&](double th) { return Point{a.c[0] + a.radius * std::cos(th), a.c[1] + a.radius * std::sin(th)}; };
    if (dx == 0.0 && dy == 0.0) return at(a.theta0);
    double rel = std::atan2(dy, dx) - a.theta0;
    rel -= 2.0 * kPi * std::floor(rel / (2.0 * kPi));
    if (rel <= a.span) return Point{a.c[0] + a.radius * dx / std::hypot(dx, dy),
                                    a.c[1] + a.radius * dy / std::hypot(dx, dy)};
    const Point p0 = at(a.theta0), p1 = at(a.theta0 + a.span);
    return distance(x, p0) <= distance(x, p1) ? p0 : p1;
}

// Planar region bounded by segments and circular arcs. The inside test is
// supplied separately; the distance is the minimum over pieces.
class PiecewiseShape : public Shape {
public:
    PiecewiseShape(std::vector<Piece> pieces, std::function<bool(PointView)> inside)
        : pieces_(std::move(pieces)), inside_(std::move(inside)) {}

    double sdf(PointView x) const override {
        const double d = distance(x, project(x));
        return inside_(x) ? -d : d;
    }

    Point project(PointView x) const override {
        Point best;
        double best_d = std::numeric_limits<double>::infinity();
        for (const Piece& piece : pieces_) {
            const Point p = std::visit([&](const auto& s) { return nearest_on(s, x); }, piece);
            const double d = distance(x, p);
            if (d < best_d) {
                best_d = d;
                best = p;
            }
        }
        return best;
    }

private:
    std::vector<Piece> pieces_;
    std::function<bool(PointView)> inside_;
};

class SlitDiskShape final : public PiecewiseShape {
public:
    SlitDiskShape()
        : PiecewiseShape({Arc{{0.0, 0.0}, 1.0, 0.0, 2.0 * kPi}, Segment{{0.0, 0.0}, {1.0, 0.0}}},
                         [](PointView x) {
                             return norm(x) < 1.0 && !(x[1] == 0.0 && x[0] >= 0.0);
                         }) {}

    int side(PointView x) const override {
        // Only points whose nearest boundary point lies on the slit carry a side.
        const Point p = project(x);
        if (p[1] != 0.0 || p[0] < 0.0 || p[0] >= 1.0) return 0;
        if (std::abs(norm(p) - 1.0) < 1e-15) return 0;
        return x[1] >= 0.0 ? 1 : -1;
    }
};

Domain planar(const std::string& name, std::shared_ptr<const Shape> shape, Point lo, Point hi) {
    return Domain(name, 2, std::move(shape), std::move(lo), std::move(hi));
}

}  // namespace

Domain::Domain(std::string name, int dim, std::shared_ptr<const Shape> shape, Point bbox_lo, Point bbox_hi)
    : name_(std::move(name)), dim_(dim), shape_(std::move(shape)), lo_(std::move(bbox_lo)),
      hi_(std::move(bbox_hi)) {}

double Domain::scale() const { return distance(lo_, hi_); }

Domain builtin_domain(const std::string& name, double param) {
    if (name == "disk") return planar(name, std::make_shared<BallShape>(2), {-1, -1}, {1, 1});
    if (name == "square") return planar(name, std::make_shared<SquareShape>(), {-1, -1}, {1, 1});
    if (name == "half_disk") {
        auto shape = std::make_shared<PiecewiseShape>(
            std::vector<Piece>{Arc{{0.0, 0.0}, 1.0, 0.0, kPi}, Segment{{-1.0, 0.0}, {1.0, 0.0}}},
            [](PointView x) { return norm(x) < 1.0 && x[1] > 0.0; });
        return planar(name, shape, {-1, 0}, {1, 1});
    }
    if (name == "lipschitz_graph") {
        const double A = param > 0.0 ? param : 1.0;
        const std::vector<Point> v{{-1.0, A / 2}, {0.0, -A / 2}, {1.0, A / 2},
                                   {1.0, A / 2 + 2.0}, {-1.0, A / 2 + 2.0}};
        std::vector<Piece> pieces;
        for (std::size_t i = 0; i < v.size(); ++i) pieces.push_back(Segment{v[i], v[(i + 1) % v.size()]});
        auto inside = [A](PointView x) {
            return x[0] > -1.0 && x[0] < 1.0 && x[1] > A * std::abs(x[0]) - A / 2 && x[1] < A / 2 + 2.0;
        };
        return planar(name, std::make_shared<PiecewiseShape>(pieces, inside), {-1, -A / 2},
                      {1, A / 2 + 2.0});
    }
    if (name == "slit_disk") return planar(name, std::make_shared<SlitDiskShape>(), {-1, -1}, {1, 1});
    if (name == "annulus_sector") {
        const double th = param > 0.0 ? param : kPi / 2;
        if (th >= 2.0 * kPi) throw Error(ErrorCode::InvalidArgument, "sector angle must be below 2π");
        const double r1 = 0.5, r2 = 1.0;
        std::vector<Piece> pieces{Arc{{0.0, 0.0}, r2, 0.0, th}, Arc{{0.0, 0.0}, r1, 0.0, th},
                                  Segment{{r1, 0.0}, {r2, 0.0}},
                                  Segment{{r1 * std::cos(th), r1 * std::sin(th)},
                                          {r2 * std::cos(th), r2 * std::sin(th)}}};
        auto inside = [=](PointView x) {
            const double r = norm(x);
            if (!(r > r1 && r < r2)) return false;
            double a = std::atan2(x[1], x[0]);
            if (a < 0.0) a += 2.0 * kPi;
            return a > 0.0 && a < th;
        };
        return planar(name, std::make_shared<PiecewiseShape>(pieces, inside), {-1, -1}, {1, 1});
    }
    if (name == "ball3")
        return Domain(name, 3, std::make_shared<BallShape>(3), {-1, -1, -1}, {1, 1, 1});
    throw Error(ErrorCode::UnknownDomain, "unknown domain '" + name + "'");
}

std::vector<std::string> builtin_domain_names() {
    return {"disk", "square", "half_disk", "lipschitz_graph", "slit_disk", "annulus_sector", "ball3"};
}

double lipschitz_audit(const Domain& dom, std::size_t pairs, std::uint64_t seed) {
    StreamRng rng(seed, 0);
    const std::size_t d = static_cast<std::size_t>(dom.dim());
    double worst = 0.0;
    Point x(d), y(d);
    for (std::size_t i = 0; i < pairs; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            const double w = dom.bbox_hi()[k] - dom.bbox_lo()[k];
            x[k] = dom.bbox_lo()[k] - 0.25 * w + 1.5 * w * rng.uniform();
            y[k] = dom.bbox_lo()[k] - 0.25 * w + 1.5 * w * rng.uniform();
        }
        const double dxy = distance(x, y);
        if (dxy > 0.0) worst = std::max(worst, std::abs(dom.sdf(x) - dom.sdf(y)) / dxy);
    }
    return worst;
}

}  // namespace hmlab
