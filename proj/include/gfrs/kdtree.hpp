#ifndef GFRS_KDTREE_HPP
#define GFRS_KDTREE_HPP

#include "gfrs/point_cloud.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace gfrs {

struct Neighbor {
    int index;
    double distance;
};

/// Exact spatial index over a fixed point cloud. Results are identical to a
/// brute-force scan, with ties on distance broken by smaller point index.
/// Immutable after construction; concurrent queries are safe.
class KdTree {
public:
    explicit KdTree(const PointCloud& cloud);

    std::size_t size() const { return pts_.size(); }
    const Eigen::Vector3d& point(int i) const { return pts_[static_cast<std::size_t>(i)]; }

    /// k nearest points to `query`, ascending (distance, index).
    /// Throws std::invalid_argument unless 1 <= k <= N.
    std::vector<Neighbor> knn(const Eigen::Vector3d& query, int k) const;

    /// Up to `cap` nearest points within radius r (inclusive), ascending
    /// (distance, index). Throws std::invalid_argument if r <= 0 or cap < 1.
    std::vector<Neighbor> radius_neighbors(const Eigen::Vector3d& query, double r, int cap) const;

    /// Index and distance of the single nearest point.
    Neighbor nearest(const Eigen::Vector3d& query) const;

private:
    struct Node {
        int axis = -1;          // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0; // index range for leaves
    };

    int build(int begin, int end, int depth);

    std::vector<Eigen::Vector3d> pts_;
    std::vector<int> order_; // permutation of point indices, leaf-contiguous
    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace gfrs

#endif
