#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hmlab {

using Point = std::vector<double>;
using PointView = std::span<const double>;

double dot(PointView a, PointView b);
double norm(PointView a);
double distance(PointView a, PointView b);
double distance_sq(PointView a, PointView b);

Point add(PointView a, PointView b);
Point sub(PointView a, PointView b);
Point scale(PointView a, double s);

/// Closed Euclidean ball. Membership is |x - c| <= r everywhere in the
/// library; points on the sphere count as inside.
struct Ball {
    Point center;
    double radius = 0.0;

    Ball scaled(double a) const { return Ball{center, a * radius}; }
    bool contains(PointView x) const;
    /// True when this ball lies inside `outer` (closed containment).
    bool inside(const Ball& outer) const;
};

/// Distance from x to the sphere bounding `b` (zero on the sphere).
double distance_to_sphere(const Ball& b, PointView x);

}  // namespace hmlab
