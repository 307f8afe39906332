#include "gfrs/point_cloud.hpp"

#include <cmath>
#include <stdexcept>

namespace gfrs {

Eigen::Vector3d PointCloud::centroid() const {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : points) c += p;
    return c / static_cast<double>(points.size());
}

double PointCloud::bounding_radius() const {
    const Eigen::Vector3d c = centroid();
    double r = 0.0;
    for (const auto& p : points) r = std::max(r, (p - c).norm());
    return r;
}

bool PointCloud::all_finite() const {
    for (const auto& p : points)
        if (!p.allFinite()) return false;
    return true;
}

Eigen::Matrix3Xd PointCloud::as_matrix() const {
    Eigen::Matrix3Xd m(3, points.size());
    for (std::size_t i = 0; i < points.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = points[i];
    return m;
}

PointCloud PointCloud::from_matrix(const Eigen::Matrix3Xd& m) {
    PointCloud c;
    c.points.resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.cols(); ++i) c.points[static_cast<std::size_t>(i)] = m.col(i);
    return c;
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
    if (cloud.points.empty()) throw std::invalid_argument("normalize_unit_sphere: empty cloud");
    if (!cloud.all_finite()) throw std::invalid_argument("normalize_unit_sphere: non-finite coordinates");

    const Eigen::Vector3d c = cloud.centroid();
    double max_norm = 0.0;
    for (const auto& p : cloud.points) max_norm = std::max(max_norm, (p - c).norm());
    const double scale = max_norm > 0.0 ? max_norm : 1.0;

    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& p : cloud.points) out.points.push_back((p - c) / scale);
    out.transform = NormalizeTransform{c, scale};
    return out;
}

PointCloud denormalize(const PointCloud& cloud) {
    if (!cloud.transform) throw std::invalid_argument("denormalize: cloud carries no transform");
    const auto& t = *cloud.transform;
    PointCloud out;
    out.points.reserve(cloud.size());
    for (const auto& p : cloud.points) out.points.push_back(p * t.scale + t.centroid);
    return out;
}

} // namespace gfrs
