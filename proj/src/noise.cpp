#include "gfrs/noise.hpp"

#include "gfrs/rng.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace gfrs {

Eigen::Matrix3d anisotropic_covariance_shape() {
    Eigen::Matrix3d m;
    m << 1.0, -0.5, -0.25,
        -0.5, 1.0, -0.25,
        -0.25, -0.25, 1.0;
    return m;
}

namespace {

Eigen::Vector3d gaussian3(CounterRng& rng) {
    return {rng.gaussian(), rng.gaussian(), rng.gaussian()};
}

Eigen::Vector3d draw_displacement(const NoiseSpec& spec, double s, CounterRng& rng,
                                  const Eigen::Matrix3d& aniso_chol) {
    switch (spec.kind) {
        case NoiseKind::isotropic_gaussian:
            return s * gaussian3(rng);
        case NoiseKind::laplace:
            // Per-axis independent Laplace with scale s.
            return {rng.laplace(s), rng.laplace(s), rng.laplace(s)};
        case NoiseKind::discrete: {
            const double u = rng.uniform();
            if (u < 0.4) return Eigen::Vector3d::Zero();
            const int face = static_cast<int>((u - 0.4) / 0.1);
            Eigen::Vector3d d = Eigen::Vector3d::Zero();
            d[face / 2] = (face % 2 == 0) ? s : -s;
            return d;
        }
        case NoiseKind::anisotropic_gaussian:
            return s * (aniso_chol * gaussian3(rng));
        case NoiseKind::unidirectional_gaussian:
            return {s * rng.gaussian(), 0.0, 0.0};
        case NoiseKind::uniform_ball: {
            // Radius by cube-root inversion, direction by normalized Gaussian.
            Eigen::Vector3d dir = gaussian3(rng);
            while (dir.norm() == 0.0) dir = gaussian3(rng);
            dir.normalize();
            return s * std::cbrt(rng.uniform()) * dir;
        }
    }
    throw std::invalid_argument("apply_noise: unknown noise kind");
}

} // namespace

PointCloud apply_noise(const PointCloud& cloud, const NoiseSpec& spec, double reference_radius) {
    if (cloud.points.empty()) throw std::invalid_argument("apply_noise: empty cloud");
    if (spec.scale <= 0.0) throw std::invalid_argument("apply_noise: scale must be positive");
    const double s = spec.scale * reference_radius;
    const Eigen::Matrix3d chol =
        Eigen::LLT<Eigen::Matrix3d>(anisotropic_covariance_shape()).matrixL();

    const CounterRng base(spec.seed);
    PointCloud out = cloud;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        CounterRng rng = base.substream(static_cast<std::uint64_t>(i));
        const Eigen::Vector3d d = draw_displacement(spec, s, rng, chol);
        if (spec.kind == NoiseKind::unidirectional_gaussian) {
            out.points[i].x() += d.x(); // y and z stay bit-exact
        } else {
            out.points[i] += d;
        }
    }
    return out;
}

PointCloud apply_noise(const PointCloud& cloud, const NoiseSpec& spec) {
    return apply_noise(cloud, spec, cloud.bounding_radius());
}

PointCloud naive_upsample_init(const PointCloud& cloud, int ratio, double sigma,
                               std::uint64_t seed) {
    if (ratio < 2) throw std::invalid_argument("naive_upsample_init: ratio must be >= 2");
    if (sigma < 0.0) throw std::invalid_argument("naive_upsample_init: sigma must be >= 0");
    if (cloud.points.empty()) throw std::invalid_argument("naive_upsample_init: empty cloud");

    const double s = sigma * cloud.bounding_radius();
    const std::size_t n = cloud.size();
    const CounterRng base(seed);

    PointCloud out;
    out.points.resize(static_cast<std::size_t>(ratio) * n);
    for (int j = 0; j < ratio; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            CounterRng rng = base.substream(static_cast<std::uint64_t>(j) * n + i);
            Eigen::Vector3d d = Eigen::Vector3d::Zero();
            if (s > 0.0) d = s * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
            out.points[static_cast<std::size_t>(j) * n + i] = cloud.points[i] + d;
        }
    }
    return out;
}

} // namespace gfrs
