#include <doctest.h>

#include "gfrs/noise.hpp"
#include "gfrs/rng.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

using namespace gfrs;

namespace {

// A cloud with bounding radius exactly 1 about its centroid.
PointCloud unit_cloud(int n, std::uint64_t seed) {
    CounterRng rng(seed);
    PointCloud c;
    c.points.emplace_back(1, 0, 0);
    c.points.emplace_back(-1, 0, 0);
    for (int i = 2; i < n; ++i)
        c.points.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                              rng.uniform(-0.5, 0.5));
    return c;
}

std::vector<Eigen::Vector3d> displacements(const PointCloud& before, const PointCloud& after) {
    std::vector<Eigen::Vector3d> d;
    for (std::size_t i = 0; i < before.size(); ++i) d.push_back(after.points[i] - before.points[i]);
    return d;
}

} // namespace

TEST_CASE("discrete noise support and zero frequency") {
    const PointCloud c = unit_cloud(100000, 1);
    NoiseSpec spec;
    spec.kind = NoiseKind::discrete;
    spec.scale = 0.03;
    spec.seed = 2;
    const auto d = displacements(c, apply_noise(c, spec));
    const double s = 0.03 * c.bounding_radius();
    int zeros = 0;
    std::map<int, int> faces;
    for (const auto& v : d) {
        int nonzero = 0, axis = -1;
        for (int a = 0; a < 3; ++a)
            if (v[a] != 0.0) { ++nonzero; axis = a; }
        if (nonzero == 0) { ++zeros; continue; }
        REQUIRE(nonzero == 1);
        CHECK(std::abs(std::abs(v[axis]) - s) < 1e-12);
        ++faces[axis * 2 + (v[axis] > 0 ? 0 : 1)];
    }
    const double zfrac = static_cast<double>(zeros) / static_cast<double>(d.size());
    CHECK(zfrac == doctest::Approx(0.4).epsilon(0.05)); // 0.4 +- 0.02
    for (const auto& [face, cnt] : faces)               // each face has probability 0.1
        CHECK(std::abs(cnt / 1e5 - 0.1) < 0.01);
}

TEST_CASE("unidirectional noise leaves y and z bit-exact") {
    const PointCloud c = unit_cloud(500, 3);
    NoiseSpec spec;
    spec.kind = NoiseKind::unidirectional_gaussian;
    spec.scale = 0.05;
    spec.seed = 4;
    const PointCloud out = apply_noise(c, spec);
    int moved = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(out.points[i].y() == c.points[i].y());
        CHECK(out.points[i].z() == c.points[i].z());
        if (out.points[i].x() != c.points[i].x()) ++moved;
    }
    CHECK(moved > 450);
}

TEST_CASE("isotropic gaussian moments") {
    const PointCloud c = unit_cloud(100000, 5);
    NoiseSpec spec;
    spec.scale = 0.02;
    spec.seed = 6;
    const auto d = displacements(c, apply_noise(c, spec));
    for (int a = 0; a < 3; ++a) {
        double sum = 0, sum2 = 0;
        for (const auto& v : d) { sum += v[a]; sum2 += v[a] * v[a]; }
        const double mean = sum / static_cast<double>(d.size());
        const double sd = std::sqrt(sum2 / static_cast<double>(d.size()) - mean * mean);
        CHECK(std::abs(mean) < 3 * 0.02 / std::sqrt(1e5));
        CHECK(std::abs(sd - 0.02) < 3 * 0.02 / std::sqrt(2e5));
    }
}

TEST_CASE("laplace noise per-axis variance") {
    const PointCloud c = unit_cloud(100000, 7);
    NoiseSpec spec;
    spec.kind = NoiseKind::laplace;
    spec.scale = 0.03;
    spec.seed = 8;
    const auto d = displacements(c, apply_noise(c, spec));
    for (int a = 0; a < 3; ++a) {
        double sum2 = 0;
        for (const auto& v : d) sum2 += v[a] * v[a];
        const double var = sum2 / static_cast<double>(d.size());
        CHECK(var == doctest::Approx(2 * 0.03 * 0.03).epsilon(0.05));
    }
}

TEST_CASE("anisotropic covariance matches the declared shape") {
    const PointCloud c = unit_cloud(100000, 9);
    NoiseSpec spec;
    spec.kind = NoiseKind::anisotropic_gaussian;
    spec.scale = 0.05;
    spec.seed = 10;
    const auto d = displacements(c, apply_noise(c, spec));
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& v : d) cov += v * v.transpose();
    cov /= static_cast<double>(d.size());
    const Eigen::Matrix3d expect = 0.05 * 0.05 * anisotropic_covariance_shape();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(cov(i, j) - expect(i, j)) < 0.05 * std::abs(expect(i, j)) + 1e-7);
}

TEST_CASE("uniform ball stays within radius and is not concentrated") {
    const PointCloud c = unit_cloud(20000, 11);
    NoiseSpec spec;
    spec.kind = NoiseKind::uniform_ball;
    spec.scale = 0.1;
    spec.seed = 12;
    const auto d = displacements(c, apply_noise(c, spec));
    const double r = 0.1 * c.bounding_radius();
    int outer = 0;
    for (const auto& v : d) {
        REQUIRE(v.norm() <= r + 1e-12);
        if (v.norm() > r * std::cbrt(0.5)) ++outer; // half the volume lies beyond r*cbrt(1/2)
    }
    CHECK(std::abs(outer / 2e4 - 0.5) < 0.02);
}

TEST_CASE("noise is deterministic and order-independent") {
    const PointCloud c = unit_cloud(64, 13);
    NoiseSpec spec;
    spec.scale = 0.05;
    spec.seed = 14;
    const PointCloud a = apply_noise(c, spec);
    const PointCloud b = apply_noise(c, spec);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(a.points[i] == b.points[i]);

    // The displacement of a point depends only on its index, not on the
    // rest of the cloud (counter-based per-point streams).
    PointCloud prefix;
    prefix.points = {c.points[0], c.points[1]};
    const PointCloud ap = apply_noise(prefix, spec, c.bounding_radius());
    CHECK(ap.points[0] == a.points[0]);
    CHECK(ap.points[1] == a.points[1]);
}

TEST_CASE("vanishing scale leaves the cloud in place") {
    const PointCloud c = unit_cloud(256, 15);
    for (const NoiseKind kind :
         {NoiseKind::isotropic_gaussian, NoiseKind::laplace, NoiseKind::anisotropic_gaussian,
          NoiseKind::unidirectional_gaussian, NoiseKind::uniform_ball}) {
        NoiseSpec spec;
        spec.kind = kind;
        spec.scale = 1e-12;
        spec.seed = 16;
        const PointCloud out = apply_noise(c, spec);
        for (std::size_t i = 0; i < c.size(); ++i)
            CHECK((out.points[i] - c.points[i]).norm() < 1e-9);
    }
}

TEST_CASE("apply_noise argument validation") {
    NoiseSpec spec;
    CHECK_THROWS_AS(apply_noise(PointCloud{}, spec), std::invalid_argument);
    spec.scale = 0.0;
    CHECK_THROWS_AS(apply_noise(unit_cloud(4, 1), spec), std::invalid_argument);
}

TEST_CASE("naive_upsample_init layout and determinism") {
    const PointCloud c = unit_cloud(512, 17);
    const PointCloud up = naive_upsample_init(c, 4, 0.02, 18);
    REQUIRE(up.size() == 2048);
    // sigma 0: exact copies in source-major blocks.
    const PointCloud exact = naive_upsample_init(c, 3, 0.0, 19);
    REQUIRE(exact.size() == 3 * 512);
    for (int j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < c.size(); ++i)
            CHECK(exact.points[static_cast<std::size_t>(j) * 512 + i] == c.points[i]);
    // Each output stays near its source (Gaussian tails).
    int far = 0;
    for (int j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < c.size(); ++i)
            if ((up.points[static_cast<std::size_t>(j) * 512 + i] - c.points[i]).norm() >
                6 * 0.02)
                ++far;
    CHECK(far == 0);
    CHECK_THROWS_AS(naive_upsample_init(c, 1, 0.02, 1), std::invalid_argument);
}
