#include <doctest.h>

#include "gfrs/kdtree.hpp"
#include "gfrs/rng.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

using namespace gfrs;

namespace {

PointCloud random_cloud(int n, std::uint64_t seed, double extent = 1.0) {
    CounterRng rng(seed);
    PointCloud c;
    for (int i = 0; i < n; ++i)
        c.points.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                              rng.uniform(-extent, extent));
    return c;
}

// Brute-force reference: all (distance, index) ascending with index tiebreak.
std::vector<Neighbor> brute_sorted(const PointCloud& c, const Eigen::Vector3d& q) {
    std::vector<Neighbor> all;
    for (int i = 0; i < static_cast<int>(c.size()); ++i)
        all.push_back({i, (c.points[static_cast<std::size_t>(i)] - q).norm()});
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
    });
    return all;
}

} // namespace

TEST_CASE("single point, k=1") {
    PointCloud c;
    c.points = {Eigen::Vector3d(1, 2, 3)};
    const KdTree t(c);
    const auto nb = t.knn(Eigen::Vector3d(1, 2, 4), 1);
    REQUIRE(nb.size() == 1);
    CHECK(nb[0].index == 0);
    CHECK(nb[0].distance == doctest::Approx(1.0));
}

TEST_CASE("coincident query has distance zero") {
    const PointCloud c = random_cloud(50, 1);
    const KdTree t(c);
    const auto nb = t.knn(c.points[17], 1);
    CHECK(nb[0].index == 17);
    CHECK(nb[0].distance == 0.0);
}

TEST_CASE("knn equals brute force on random clouds") {
    for (std::uint64_t s = 0; s < 8; ++s) {
        const int n = 16 + static_cast<int>(s) * 30;
        const PointCloud c = random_cloud(n, s + 10);
        const KdTree t(c);
        CounterRng qr(99 + s);
        for (int q = 0; q < 25; ++q) {
            const Eigen::Vector3d query(qr.uniform(-1.2, 1.2), qr.uniform(-1.2, 1.2),
                                        qr.uniform(-1.2, 1.2));
            const auto ref = brute_sorted(c, query);
            for (int k : {1, 3, 7, n}) {
                const auto got = t.knn(query, k);
                REQUIRE(static_cast<int>(got.size()) == k);
                for (int i = 0; i < k; ++i) {
                    CHECK(got[static_cast<std::size_t>(i)].index ==
                          ref[static_cast<std::size_t>(i)].index);
                    CHECK(got[static_cast<std::size_t>(i)].distance ==
                          doctest::Approx(ref[static_cast<std::size_t>(i)].distance));
                }
            }
        }
    }
}

TEST_CASE("distance ties broken by smaller index") {
    PointCloud c;
    // Two points equidistant from the origin query, plus a farther one.
    c.points = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(-1, 0, 0), Eigen::Vector3d(0, 3, 0)};
    const KdTree t(c);
    const auto nb = t.knn(Eigen::Vector3d::Zero(), 2);
    CHECK(nb[0].index == 0);
    CHECK(nb[1].index == 1);
    // Duplicate points: both returned, smaller index first.
    PointCloud d;
    d.points = {Eigen::Vector3d(5, 5, 5), Eigen::Vector3d(5, 5, 5)};
    const KdTree td(d);
    const auto nd = td.knn(Eigen::Vector3d(5, 5, 5), 2);
    CHECK(nd[0].index == 0);
    CHECK(nd[1].index == 1);
}

TEST_CASE("knn rejects invalid k") {
    const PointCloud c = random_cloud(10, 2);
    const KdTree t(c);
    CHECK_THROWS_AS(t.knn(Eigen::Vector3d::Zero(), 0), std::invalid_argument);
    CHECK_THROWS_AS(t.knn(Eigen::Vector3d::Zero(), 11), std::invalid_argument);
}

TEST_CASE("radius_neighbors equals brute-force filter") {
    for (std::uint64_t s = 0; s < 6; ++s) {
        const PointCloud c = random_cloud(120, s + 40);
        const KdTree t(c);
        CounterRng qr(7 + s);
        for (int q = 0; q < 20; ++q) {
            const Eigen::Vector3d query(qr.uniform(-1, 1), qr.uniform(-1, 1), qr.uniform(-1, 1));
            const double r = qr.uniform(0.05, 0.9);
            const auto ref = brute_sorted(c, query);
            for (int cap : {1, 5, 200}) {
                const auto got = t.radius_neighbors(query, r, cap);
                std::vector<Neighbor> expect;
                for (const auto& nb : ref) {
                    if (nb.distance > r) break;
                    if (static_cast<int>(expect.size()) == cap) break;
                    expect.push_back(nb);
                }
                REQUIRE(got.size() == expect.size());
                for (std::size_t i = 0; i < got.size(); ++i) {
                    CHECK(got[i].index == expect[i].index);
                    CHECK(got[i].distance == doctest::Approx(expect[i].distance));
                }
            }
        }
    }
}

TEST_CASE("radius_neighbors empty result and argument errors") {
    const PointCloud c = random_cloud(20, 3);
    const KdTree t(c);
    CHECK(t.radius_neighbors(Eigen::Vector3d(50, 50, 50), 0.5, 10).empty());
    CHECK_THROWS_AS(t.radius_neighbors(Eigen::Vector3d::Zero(), 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(t.radius_neighbors(Eigen::Vector3d::Zero(), -1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(t.radius_neighbors(Eigen::Vector3d::Zero(), 1.0, 0), std::invalid_argument);
}

TEST_CASE("radius boundary is inclusive") {
    PointCloud c;
    c.points = {Eigen::Vector3d(1, 0, 0)};
    const KdTree t(c);
    const auto got = t.radius_neighbors(Eigen::Vector3d::Zero(), 1.0, 4);
    REQUIRE(got.size() == 1);
    CHECK(got[0].index == 0);
}

TEST_CASE("nearest matches knn k=1") {
    const PointCloud c = random_cloud(200, 8);
    const KdTree t(c);
    CounterRng qr(21);
    for (int q = 0; q < 50; ++q) {
        const Eigen::Vector3d query(qr.uniform(-1, 1), qr.uniform(-1, 1), qr.uniform(-1, 1));
        const auto a = t.nearest(query);
        const auto b = t.knn(query, 1)[0];
        CHECK(a.index == b.index);
        CHECK(a.distance == b.distance);
    }
}
