#ifndef GFRS_METRICS_HPP
#define GFRS_METRICS_HPP

#include "gfrs/point_cloud.hpp"

#include <array>
#include <iosfwd>
#include <utility>
#include <string>
#include <vector>

namespace gfrs {

struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;

    /// Throws std::invalid_argument on out-of-range indices or faces with
    /// area below 1e-12.
    void validate() const;
};

/// Closed-form unsigned distance surfaces used as exact oracles.
struct AnalyticSurface {
    enum class Kind { sphere, torus, box, capsule };
    Kind kind = Kind::sphere;
    // sphere: a = R
    // torus:  a = major radius, b = tube radius (axis z)
    // box:    half-extents (hx, hy, hz)
    // capsule: a = half-length of the core segment (axis z), b = radius
    double a = 1.0, b = 0.0, c = 0.0;

    double distance(const Eigen::Vector3d& x) const;
};

/// Symmetric mean squared nearest-neighbor distance.
double chamfer(const PointCloud& x, const PointCloud& y);

/// max(max-min distance in either direction), unsquared.
double hausdorff(const PointCloud& x, const PointCloud& y);

/// One-sided mean squared exact point-to-triangle distance.
double point_to_mesh(const PointCloud& x, const TriangleMesh& mesh);

/// Exact unsigned distance from a point to the closest point of a triangle.
double point_triangle_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                               const Eigen::Vector3d& b, const Eigen::Vector3d& c);

struct SurfaceDistances {
    std::vector<double> per_point;
    double mean = 0.0;
};

SurfaceDistances point_to_surface(const PointCloud& x, const AnalyticSurface& surf);

/// Emits "name<TAB>value" lines.
void write_metric_report(std::ostream& out,
                         const std::vector<std::pair<std::string, double>>& metrics);

} // namespace gfrs

#endif
