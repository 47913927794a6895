#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hmlab/geometry.h"

namespace hmlab {

/// Geometry behind a Domain: exact signed distance (negative inside) and
/// nearest boundary point.
class Shape {
public:
    virtual ~Shape() = default;
    virtual double sdf(PointView x) const = 0;
    virtual Point project(PointView x) const = 0;
    /// Two-sided boundary pieces (a slit) report which side a nearby point
    /// sits on: +1 or -1. Zero everywhere else.
    virtual int side(PointView x) const {
        (void)x;
        return 0;
    }
};

class Domain {
public:
    Domain(std::string name, int dim, std::shared_ptr<const Shape> shape, Point bbox_lo, Point bbox_hi);

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    double sdf(PointView x) const { return shape_->sdf(x); }
    Point project(PointView x) const { return shape_->project(x); }
    int side(PointView x) const { return shape_->side(x); }
    bool contains(PointView x) const { return sdf(x) < 0.0; }
    const Point& bbox_lo() const { return lo_; }
    const Point& bbox_hi() const { return hi_; }
    /// Diagonal of the bounding box.
    double scale() const;

private:
    std::string name_;
    int dim_;
    std::shared_ptr<const Shape> shape_;
    Point lo_, hi_;
};

/// disk, square ([-1,1]^2), half_disk (upper half of the unit disk),
/// lipschitz_graph (V-shaped polygon of slope `param`, default 1),
/// slit_disk (unit disk minus [0,1) x {0}), annulus_sector (0.5 < r < 1,
/// 0 < angle < `param`, default π/2), ball3 (unit ball of R^3).
/// Throws UnknownDomain.
Domain builtin_domain(const std::string& name, double param = 0.0);

std::vector<std::string> builtin_domain_names();

/// Sampled audit of |sdf(x) - sdf(y)| <= |x - y|; returns the worst ratio.
double lipschitz_audit(const Domain& dom, std::size_t pairs, std::uint64_t seed);

}  // namespace hmlab
