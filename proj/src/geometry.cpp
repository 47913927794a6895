#include "hmlab/geometry.h"

#include <cassert>
#include <cmath>

namespace hmlab {

double dot(PointView a, PointView b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(PointView a) { return std::sqrt(dot(a, a)); }

double distance_sq(PointView a, PointView b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double distance(PointView a, PointView b) { return std::sqrt(distance_sq(a, b)); }

Point add(PointView a, PointView b) {
    Point r(a.begin(), a.end());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

Point sub(PointView a, PointView b) {
    Point r(a.begin(), a.end());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

Point scale(PointView a, double s) {
    Point r(a.begin(), a.end());
    for (double& v : r) v *= s;
    return r;
}

bool Ball::contains(PointView x) const { return distance(center, x) <= radius; }

bool Ball::inside(const Ball& outer) const {
    return distance(center, outer.center) + radius <= outer.radius;
}

double distance_to_sphere(const Ball& b, PointView x) {
    return std::abs(distance(b.center, x) - b.radius);
}

}  // namespace hmlab
