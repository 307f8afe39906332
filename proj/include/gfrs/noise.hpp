#ifndef GFRS_NOISE_HPP
#define GFRS_NOISE_HPP

#include "gfrs/point_cloud.hpp"

#include <cstdint>

namespace gfrs {

enum class NoiseKind {
    isotropic_gaussian,
    laplace,
    discrete,
    anisotropic_gaussian,
    unidirectional_gaussian,
    uniform_ball,
};

struct NoiseSpec {
    NoiseKind kind = NoiseKind::isotropic_gaussian;
    /// Scale as a fraction of the bounding-sphere radius (0.01 = 1%).
    double scale = 0.01;
    std::uint64_t seed = 0;
};

/// Fixed covariance shape of the anisotropic Gaussian model (scaled by s^2).
Eigen::Matrix3d anisotropic_covariance_shape();

/// Perturbs every point by a displacement drawn from the requested model.
/// The absolute scale is spec.scale * bounding-sphere radius (computed about
/// the centroid of `cloud`). Per-point noise comes from split counter streams,
/// so output is deterministic in (cloud, spec) and order-independent.
PointCloud apply_noise(const PointCloud& cloud, const NoiseSpec& spec);

/// Same, with the reference radius supplied explicitly (used when a patch
/// should be degraded relative to its parent cloud's radius).
PointCloud apply_noise(const PointCloud& cloud, const NoiseSpec& spec, double reference_radius);

/// Replaces each point by `ratio` Gaussian-perturbed copies (std = sigma *
/// bounding radius), giving a denser, noisy initialization for upsampling.
/// Output point j*N+i derives from input point i. Requires ratio >= 2.
PointCloud naive_upsample_init(const PointCloud& cloud, int ratio, double sigma,
                               std::uint64_t seed);

} // namespace gfrs

#endif
