#ifndef GFRS_SHAPES_HPP
#define GFRS_SHAPES_HPP

#include "gfrs/metrics.hpp"
#include "gfrs/point_cloud.hpp"

#include <cstdint>
#include <optional>

namespace gfrs {

enum class ShapeSampler { uniform_area, stratified };

struct ShapeSpec {
    AnalyticSurface surface; // kind + geometric parameters
    int count = 2048;
    ShapeSampler sampler = ShapeSampler::uniform_area;
    std::uint64_t seed = 0;
};

struct ShapeSample {
    PointCloud cloud;
    AnalyticSurface surface;
    std::optional<TriangleMesh> mesh;
};

/// Samples `count` points exactly on the surface, area-uniformly (the
/// stratified sampler stratifies the first surface parameter and draws the
/// rest at random). Deterministic per seed. Set mesh_resolution > 0 to also
/// emit a parametric triangle mesh whose vertices lie on the surface.
ShapeSample sample_shape(const ShapeSpec& spec, int mesh_resolution = 0);

/// Parametric mesh for a surface (vertices exactly on the surface).
TriangleMesh make_mesh(const AnalyticSurface& surface, int resolution);

} // namespace gfrs

#endif
