#include "gfrs/metrics.hpp"

#include "gfrs/kdtree.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace gfrs {

void TriangleMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (const auto& f : faces) {
        for (const int v : f)
            if (v < 0 || v >= n) throw std::invalid_argument("TriangleMesh: face index out of range");
        const Eigen::Vector3d ab = vertices[static_cast<std::size_t>(f[1])] - vertices[static_cast<std::size_t>(f[0])];
        const Eigen::Vector3d ac = vertices[static_cast<std::size_t>(f[2])] - vertices[static_cast<std::size_t>(f[0])];
        if (0.5 * ab.cross(ac).norm() <= 1e-12)
            throw std::invalid_argument("TriangleMesh: degenerate face");
    }
}

double AnalyticSurface::distance(const Eigen::Vector3d& x) const {
    switch (kind) {
        case Kind::sphere:
            return std::abs(x.norm() - a);
        case Kind::torus: {
            const double q = std::hypot(std::hypot(x.x(), x.y()) - a, x.z());
            return std::abs(q - b);
        }
        case Kind::box: {
            const Eigen::Vector3d h(a, b, c);
            const Eigen::Vector3d q = x.cwiseAbs() - h;
            const double outside = q.cwiseMax(0.0).norm();
            const double inside = std::min(q.maxCoeff(), 0.0);
            return std::abs(outside + inside);
        }
        case Kind::capsule: {
            const double z = std::clamp(x.z(), -a, a);
            const double d = (x - Eigen::Vector3d(0.0, 0.0, z)).norm();
            return std::abs(d - b);
        }
    }
    throw std::invalid_argument("AnalyticSurface: unknown kind");
}

namespace {

double mean_sq_nn(const PointCloud& from, const KdTree& to) {
    double sum = 0.0;
    for (const auto& p : from.points) {
        const double d = to.nearest(p).distance;
        sum += d * d;
    }
    return sum / static_cast<double>(from.size());
}

double max_nn(const PointCloud& from, const KdTree& to) {
    double m = 0.0;
    for (const auto& p : from.points) m = std::max(m, to.nearest(p).distance);
    return m;
}

} // namespace

double chamfer(const PointCloud& x, const PointCloud& y) {
    if (x.points.empty() || y.points.empty()) throw std::invalid_argument("chamfer: empty cloud");
    const KdTree ix(x), iy(y);
    return mean_sq_nn(x, iy) + mean_sq_nn(y, ix);
}

double hausdorff(const PointCloud& x, const PointCloud& y) {
    if (x.points.empty() || y.points.empty()) throw std::invalid_argument("hausdorff: empty cloud");
    const KdTree ix(x), iy(y);
    return std::max(max_nn(x, iy), max_nn(y, ix));
}

double point_triangle_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                               const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    // Closest point on a triangle via barycentric region tests.
    const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();

    const Eigen::Vector3d bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return (p - (a + v * ab)).norm();
    }

    const Eigen::Vector3d cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return (p - (a + w * ac)).norm();
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + w * (c - b))).norm();
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return (p - (a + v * ab + w * ac)).norm();
}

double point_to_mesh(const PointCloud& x, const TriangleMesh& mesh) {
    if (mesh.faces.empty()) throw std::invalid_argument("point_to_mesh: empty mesh");
    if (x.points.empty()) throw std::invalid_argument("point_to_mesh: empty cloud");
    double sum = 0.0;
    for (const auto& p : x.points) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& f : mesh.faces) {
            best = std::min(best,
                            point_triangle_distance(p, mesh.vertices[static_cast<std::size_t>(f[0])],
                                                    mesh.vertices[static_cast<std::size_t>(f[1])],
                                                    mesh.vertices[static_cast<std::size_t>(f[2])]));
        }
        sum += best * best;
    }
    return sum / static_cast<double>(x.size());
}

SurfaceDistances point_to_surface(const PointCloud& x, const AnalyticSurface& surf) {
    SurfaceDistances out;
    out.per_point.reserve(x.size());
    double sum = 0.0;
    for (const auto& p : x.points) {
        const double d = surf.distance(p);
        out.per_point.push_back(d);
        sum += d;
    }
    out.mean = x.points.empty() ? 0.0 : sum / static_cast<double>(x.size());
    return out;
}

void write_metric_report(std::ostream& out,
                         const std::vector<std::pair<std::string, double>>& metrics) {
    for (const auto& [name, value] : metrics) out << name << "\t" << value << "\n";
}

} // namespace gfrs
