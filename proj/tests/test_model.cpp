#include <doctest.h>

#include "gfrs/model.hpp"
#include "gfrs/rng.hpp"

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

GradientFieldModel small_model(std::uint64_t seed = 7) {
    ModelConfig cfg;
    cfg.k_feat = 8;
    cfg.k_max = 16;
    return GradientFieldModel::init(cfg, seed);
}

} // namespace

TEST_CASE("cosine weight values and validation") {
    CHECK(cosine_weight(0.0, 2.0) == doctest::Approx(1.0));
    CHECK(cosine_weight(1.0, 2.0) == doctest::Approx(0.5));
    CHECK(cosine_weight(2.0, 2.0) == doctest::Approx(0.0));
    CHECK(cosine_weight(3.0, 2.0) == 0.0);
    CHECK_THROWS_AS(cosine_weight(-0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(cosine_weight(0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(cosine_weight(0.5, -1.0), std::invalid_argument);
}

TEST_CASE("context radius policy") {
    // Regular 1-D lattice: every nearest-neighbor spacing is exactly 0.1.
    PointCloud line;
    for (int i = 0; i < 10; ++i) line.points.emplace_back(0.1 * i, 0, 0);
    const KdTree tree(line);
    ModelConfig cfg;
    cfg.radius_factor = 3.0;
    CHECK(context_radius(cfg, line, tree) == doctest::Approx(0.3).epsilon(1e-12));
    cfg.fixed_radius = 0.77;
    CHECK(context_radius(cfg, line, tree) == 0.77);

    PointCloud coincide;
    coincide.points = {Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(1, 1, 1)};
    cfg.fixed_radius = 0.0;
    CHECK_THROWS_AS(context_radius(cfg, coincide, KdTree(coincide)), std::invalid_argument);
}

TEST_CASE("context_knn excludes self and extract checks the minimum size") {
    const PointCloud c = random_cloud(20, 1);
    const KdTree tree(c);
    const auto idx = context_knn(c, tree, 5);
    REQUIRE(idx.size() == 20);
    for (int i = 0; i < 20; ++i) {
        REQUIRE(idx[static_cast<std::size_t>(i)].size() == 5);
        for (int j : idx[static_cast<std::size_t>(i)]) CHECK(j != i);
    }
    CHECK_THROWS_AS(context_knn(c, tree, 20), std::invalid_argument);

    GradientFieldModel model = small_model();
    const PointCloud tiny = random_cloud(model.cfg.k_feat, 2); // one short of k_feat + 1
    CHECK_THROWS_AS(extract_context_features(model, tiny), std::invalid_argument);
}

TEST_CASE("parameter count is positive and deterministic in the seed") {
    GradientFieldModel a = small_model(3);
    GradientFieldModel b = small_model(3);
    GradientFieldModel c = small_model(4);
    CHECK(a.parameter_count() > 0);
    CHECK(a.parameter_count() == b.parameter_count());
    bool same = true, differs = false;
    for (auto& [name, p] : a.params_f) {
        if (p->value != b.params_f.at(name).value) same = false;
        if (p->value != c.params_f.at(name).value) differs = true;
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("field is invariant to context point order") {
    GradientFieldModel model = small_model();
    const PointCloud c = random_cloud(96, 5);
    PointCloud shuffled = c;
    CounterRng rng(6);
    for (std::size_t i = shuffled.size() - 1; i > 0; --i)
        std::swap(shuffled.points[i], shuffled.points[rng.uniform_index(i + 1)]);

    const ContextFeatures f1 = extract_context_features(model, c);
    const ContextFeatures f2 = extract_context_features(model, shuffled);
    std::vector<Eigen::Vector3d> queries;
    CounterRng qr(7);
    for (int q = 0; q < 12; ++q)
        queries.emplace_back(qr.uniform(-1, 1), qr.uniform(-1, 1), qr.uniform(-1, 1));
    const Eigen::Matrix3Xd g1 = estimate_gradients(model, f1, queries);
    const Eigen::Matrix3Xd g2 = estimate_gradients(model, f2, queries);
    CHECK((g1 - g2).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("field is equivariant under translation") {
    GradientFieldModel model = small_model();
    const PointCloud c = random_cloud(80, 8);
    const Eigen::Vector3d t(5.0, -3.0, 2.0);
    PointCloud moved = c;
    for (auto& p : moved.points) p += t;

    const ContextFeatures f1 = extract_context_features(model, c);
    const ContextFeatures f2 = extract_context_features(model, moved);
    CHECK(f2.radius == doctest::Approx(f1.radius).epsilon(1e-12));
    std::vector<Eigen::Vector3d> q1, q2;
    CounterRng qr(9);
    for (int q = 0; q < 10; ++q) {
        q1.emplace_back(qr.uniform(-1, 1), qr.uniform(-1, 1), qr.uniform(-1, 1));
        q2.push_back(q1.back() + t);
    }
    const Eigen::Matrix3Xd g1 = estimate_gradients(model, f1, q1);
    const Eigen::Matrix3Xd g2 = estimate_gradients(model, f2, q2);
    CHECK((g1 - g2).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("batched queries match single-query evaluation") {
    GradientFieldModel model = small_model();
    const PointCloud c = random_cloud(64, 10);
    const ContextFeatures ctx = extract_context_features(model, c);
    std::vector<Eigen::Vector3d> queries;
    CounterRng qr(11);
    for (int q = 0; q < 9; ++q)
        queries.emplace_back(qr.uniform(-1, 1), qr.uniform(-1, 1), qr.uniform(-1, 1));
    const Eigen::Matrix3Xd g = estimate_gradients(model, ctx, queries);
    for (int q = 0; q < 9; ++q) {
        const Eigen::Vector3d single =
            estimate_gradient(model, queries[static_cast<std::size_t>(q)], ctx);
        CHECK((g.col(q) - single).norm() < 1e-12);
    }
}

TEST_CASE("isolated queries share the empty-neighborhood output") {
    GradientFieldModel model = small_model();
    const PointCloud c = random_cloud(64, 12);
    const ContextFeatures ctx = extract_context_features(model, c);
    const Eigen::Vector3d far1(100, 0, 0), far2(-50, 80, 10);
    CHECK(aggregated_feature(model, far1, ctx).norm() == 0.0);
    CHECK(aggregated_feature(model, far2, ctx).norm() == 0.0);
    const Eigen::Vector3d g1 = estimate_gradient(model, far1, ctx);
    const Eigen::Vector3d g2 = estimate_gradient(model, far2, ctx);
    CHECK((g1 - g2).norm() == 0.0);
}

TEST_CASE("contributions fade to zero at the radius boundary") {
    GradientFieldModel model = small_model();
    const PointCloud c = random_cloud(64, 13);
    const ContextFeatures ctx = extract_context_features(model, c);
    // Walk a query outward; once past every point's radius the aggregated
    // feature must vanish continuously, not jump.
    const Eigen::Vector3d dir = Eigen::Vector3d(1, 1, 1).normalized();
    double prev = std::numeric_limits<double>::infinity();
    bool reached_zero = false;
    for (double s = 2.0; s < 4.0; s += 0.005) {
        const double norm = aggregated_feature(model, s * dir, ctx).norm();
        if (norm == 0.0) {
            reached_zero = true;
            break;
        }
        prev = norm;
    }
    CHECK(reached_zero);
    CHECK(prev < 0.1); // the last nonzero sample is already tiny
}

TEST_CASE("gather_pairs groups by query and respects k_max") {
    const PointCloud c = random_cloud(128, 14);
    const KdTree tree(c);
    std::vector<Eigen::Vector3d> queries;
    CounterRng qr(15);
    for (int q = 0; q < 6; ++q)
        queries.emplace_back(qr.uniform(-1, 1), qr.uniform(-1, 1), qr.uniform(-1, 1));
    const double r = 0.5;
    const PairBatch pb = gather_pairs(tree, queries, r, 10);
    REQUIRE(pb.offsets.size() == 7);
    CHECK(pb.offsets.front() == 0);
    CHECK(pb.offsets.back() == static_cast<int>(pb.ctx_of_pair.size()));
    for (int q = 0; q < 6; ++q) {
        const int begin = pb.offsets[static_cast<std::size_t>(q)];
        const int end = pb.offsets[static_cast<std::size_t>(q) + 1];
        CHECK(end - begin <= 10);
        const auto expect = tree.radius_neighbors(queries[static_cast<std::size_t>(q)], r, 10);
        REQUIRE(end - begin == static_cast<int>(expect.size()));
        for (int p = begin; p < end; ++p) {
            CHECK(pb.query_of_pair[static_cast<std::size_t>(p)] == q);
            const int ctx = pb.ctx_of_pair[static_cast<std::size_t>(p)];
            const double d =
                (c.points[static_cast<std::size_t>(ctx)] - queries[static_cast<std::size_t>(q)])
                    .norm();
            CHECK(d <= r + 1e-12);
        }
    }
}
