#include <doctest.h>

#include "gfrs/shapes.hpp"
#include "gfrs/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

using namespace gfrs;

namespace {

PointCloud random_cloud(int n, std::uint64_t seed) {
    CounterRng rng(seed);
    PointCloud c;
    for (int i = 0; i < n; ++i)
        c.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    return c;
}

PointCloud sphere_cloud(int n, std::uint64_t seed) {
    ShapeSpec spec;
    spec.surface.kind = AnalyticSurface::Kind::sphere;
    spec.surface.a = 1.0;
    spec.count = n;
    spec.seed = seed;
    return sample_shape(spec).cloud;
}

} // namespace

TEST_CASE("target gradient hand examples") {
    PointCloud y;
    y.points = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 2, 0)};
    const KdTree tree(y);
    // Nearest to (0, 0.6, 0) is (1,0,0): distance 1.166 vs 1.4.
    const Eigen::Vector3d s = target_gradient(Eigen::Vector3d(0, 0.6, 0), tree);
    CHECK(s.isApprox(Eigen::Vector3d(1, -0.6, 0), 1e-12));
    // On a ground-truth point the pull vanishes.
    CHECK(target_gradient(Eigen::Vector3d(1, 0, 0), y).norm() == 0.0);
    // Ties go to the smaller index.
    PointCloud tie;
    tie.points = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(-1, 0, 0)};
    CHECK(target_gradient(Eigen::Vector3d::Zero(), tie)
              .isApprox(Eigen::Vector3d(1, 0, 0), 1e-12));
    CHECK_THROWS_AS(target_gradient(Eigen::Vector3d::Zero(), PointCloud{}),
                    std::invalid_argument);
}

TEST_CASE("sample_queries composition") {
    const PointCloud c = random_cloud(100, 1);
    CounterRng rng(2);
    // qpp = 1: exactly the degraded points, in order.
    const auto q1 = sample_queries(c, 1, 0.1, rng);
    REQUIRE(q1.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(q1[i] == c.points[i]);
    // zero jitter: all copies coincide with their source point.
    const auto q0 = sample_queries(c, 3, 0.0, rng);
    REQUIRE(q0.size() == 300);
    for (std::size_t i = 0; i < q0.size(); ++i) CHECK(q0[i] == c.points[i / 3]);
    CHECK_THROWS_AS(sample_queries(c, 0, 0.1, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_queries(PointCloud{}, 2, 0.1, rng), std::invalid_argument);
}

TEST_CASE("sample_queries jitter statistics") {
    const PointCloud c = random_cloud(2000, 3);
    CounterRng rng(4);
    const double std_dev = 0.05;
    const auto q = sample_queries(c, 5, std_dev, rng);
    REQUIRE(q.size() == 10000);
    double sum2 = 0;
    int jittered = 0;
    int exact = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const Eigen::Vector3d d = q[i] - c.points[i / 5];
        if (i % 5 == 0) {
            if (d.norm() == 0.0) ++exact; // each block starts with the point itself
        } else {
            sum2 += d.squaredNorm();
            ++jittered;
        }
    }
    CHECK(exact == 2000);
    const double per_axis = sum2 / (3.0 * jittered);
    CHECK(std::sqrt(per_axis) == doctest::Approx(std_dev).epsilon(0.03));
}

TEST_CASE("loss with an untrained wide-output model equals the oracle formula") {
    // Independent oracle: loss = mean_q ||s(q) - g(q)||^2 with both pieces
    // computed through the public single-point functions.
    ModelConfig mc;
    mc.k_feat = 6;
    mc.k_max = 12;
    GradientFieldModel model = GradientFieldModel::init(mc, 5);
    const PointCloud clean = sphere_cloud(128, 6);
    const PointCloud degraded = random_cloud(96, 7);
    const ContextFeatures ctx = extract_context_features(model, degraded);
    CounterRng rng(8);
    const auto queries = sample_queries(degraded, 2, 0.05, rng);
    const double got = loss(model, ctx, queries, clean);
    const KdTree gt(clean);
    double expect = 0;
    for (const auto& q : queries)
        expect += (target_gradient(q, gt) - estimate_gradient(model, q, ctx)).squaredNorm();
    expect /= static_cast<double>(queries.size());
    CHECK(got == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("loss is invariant to query order") {
    ModelConfig mc;
    mc.k_feat = 6;
    mc.k_max = 12;
    GradientFieldModel model = GradientFieldModel::init(mc, 9);
    const PointCloud clean = sphere_cloud(64, 10);
    const PointCloud degraded = sphere_cloud(64, 11);
    const ContextFeatures ctx = extract_context_features(model, degraded);
    CounterRng rng(12);
    auto queries = sample_queries(degraded, 2, 0.03, rng);
    const double a = loss(model, ctx, queries, clean);
    std::reverse(queries.begin(), queries.end());
    const double b = loss(model, ctx, queries, clean);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("training with lr 0 leaves parameters bit-identical") {
    ModelConfig mc;
    mc.k_feat = 6;
    mc.k_max = 12;
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.iterations = 3;
    cfg.patch_size = 64;
    cfg.max_queries = 64;
    cfg.seed = 13;
    const std::vector<PointCloud> clouds{sphere_cloud(128, 14)};
    const TrainResult r = train(clouds, cfg, mc);
    const GradientFieldModel fresh = GradientFieldModel::init(mc, cfg.seed);
    for (const auto& [name, p] : fresh.params_f)
        CHECK(r.model.params_f.at(name).value == p->value);
    for (const auto& [name, p] : fresh.params_h)
        CHECK(r.model.params_h.at(name).value == p->value);
    for (const auto& [name, p] : fresh.params_m)
        CHECK(r.model.params_m.at(name).value == p->value);
}

TEST_CASE("training is deterministic in the seed") {
    ModelConfig mc;
    mc.k_feat = 6;
    mc.k_max = 12;
    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.iterations = 5;
    cfg.patch_size = 64;
    cfg.max_queries = 64;
    cfg.seed = 15;
    const std::vector<PointCloud> clouds{sphere_cloud(128, 16), sphere_cloud(128, 17)};
    const TrainResult a = train(clouds, cfg, mc);
    const TrainResult b = train(clouds, cfg, mc);
    REQUIRE(a.loss_trace.size() == 5);
    CHECK(a.loss_trace == b.loss_trace);
    cfg.seed = 16;
    const TrainResult c = train(clouds, cfg, mc);
    CHECK(a.loss_trace != c.loss_trace);
}

TEST_CASE("training overfits a single small cloud") {
    ModelConfig mc;
    mc.k_feat = 8;
    mc.k_max = 16;
    TrainConfig cfg;
    cfg.lr = 2e-3;
    cfg.iterations = 2000;
    cfg.patch_size = 256;
    cfg.queries_per_point = 2;
    cfg.max_queries = 128;
    cfg.seed = 18;
    const std::vector<PointCloud> clouds{sphere_cloud(256, 19)};
    const TrainResult r = train(clouds, cfg, mc);
    REQUIRE(r.loss_trace.size() == 2000);
    const auto window_mean = [&](std::size_t end) {
        double s = 0;
        for (std::size_t i = end - 100; i < end; ++i) s += r.loss_trace[i];
        return s / 100.0;
    };
    const double head = window_mean(100);
    const double tail = window_mean(2000);
    // The loss floor is dominated by the unpredictable tangential part of
    // the displacement, so expect a solid but not dramatic reduction.
    CHECK(tail < 0.8 * head);
    CHECK(tail < 0.5 * r.loss_trace[0]);
}

TEST_CASE("train validates its configuration") {
    const std::vector<PointCloud> clouds{sphere_cloud(64, 20)};
    TrainConfig cfg;
    cfg.iterations = -1;
    CHECK_THROWS_AS(train(clouds, cfg), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.lr = -1.0;
    CHECK_THROWS_AS(train(clouds, cfg), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.noise_lo = 0.03;
    cfg.noise_hi = 0.005; // inverted range
    CHECK_THROWS_AS(train(clouds, cfg), std::invalid_argument);
    cfg = TrainConfig{};
    CHECK_THROWS_AS(train({}, cfg), std::invalid_argument);
    cfg.patch_size = 0;
    CHECK_THROWS_AS(train(clouds, cfg), std::invalid_argument);
}
