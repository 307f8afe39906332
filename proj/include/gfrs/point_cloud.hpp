#ifndef GFRS_POINT_CLOUD_HPP
#define GFRS_POINT_CLOUD_HPP

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace gfrs {

/// Normalization applied to a cloud: x' = (x - centroid) / scale.
struct NormalizeTransform {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    double scale = 1.0;
};

struct PointCloud {
    std::vector<Eigen::Vector3d> points;
    std::optional<NormalizeTransform> transform;

    std::size_t size() const { return points.size(); }

    Eigen::Vector3d centroid() const;
    /// Max distance to the centroid (bounding-sphere radius about the centroid).
    double bounding_radius() const;
    bool all_finite() const;

    /// 3xN view copy for matrix math.
    Eigen::Matrix3Xd as_matrix() const;
    static PointCloud from_matrix(const Eigen::Matrix3Xd& m);
};

/// Centers the cloud at its centroid and scales so the max point norm is 1.
/// The applied transform is recorded on the result; a cloud whose points all
/// coincide is centered with scale 1. Throws std::invalid_argument on empty
/// or non-finite input.
PointCloud normalize_unit_sphere(const PointCloud& cloud);

/// Inverse of normalize_unit_sphere using the recorded transform.
PointCloud denormalize(const PointCloud& cloud);

} // namespace gfrs

#endif
