#include "gfrs/sampling.hpp"

#include <limits>
#include <stdexcept>

namespace gfrs {

std::vector<int> farthest_point_sample(const PointCloud& cloud, int n) {
    const int N = static_cast<int>(cloud.size());
    if (n < 1 || n > N) throw std::invalid_argument("farthest_point_sample: n out of range");

    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(n));
    std::vector<double> min_d2(static_cast<std::size_t>(N), std::numeric_limits<double>::infinity());
    std::vector<bool> taken(static_cast<std::size_t>(N), false);

    int current = 0;
    picked.push_back(current);
    taken[0] = true;
    for (int step = 1; step < n; ++step) {
        int best = -1;
        double best_d2 = -1.0;
        for (int i = 0; i < N; ++i) {
            double& d2 = min_d2[static_cast<std::size_t>(i)];
            const double cand =
                (cloud.points[static_cast<std::size_t>(i)] - cloud.points[static_cast<std::size_t>(current)])
                    .squaredNorm();
            if (cand < d2) d2 = cand;
            // Strict > with ascending i breaks ties toward the smaller index.
            if (!taken[static_cast<std::size_t>(i)] && d2 > best_d2) {
                best_d2 = d2;
                best = i;
            }
        }
        current = best;
        picked.push_back(current);
        taken[static_cast<std::size_t>(current)] = true;
    }
    return picked;
}

std::vector<Patch> extract_patches(const PointCloud& cloud, int patch_size, int num_patches,
                                   bool cover) {
    const int N = static_cast<int>(cloud.size());
    if (patch_size < 1 || patch_size > N)
        throw std::invalid_argument("extract_patches: patch_size out of range");
    if (num_patches < 1) throw std::invalid_argument("extract_patches: num_patches must be >= 1");

    const KdTree index(cloud);
    std::vector<bool> covered(static_cast<std::size_t>(N), false);

    auto make_patch = [&](int seed) {
        Patch p;
        p.seed_index = seed;
        const auto nbrs = index.knn(cloud.points[static_cast<std::size_t>(seed)], patch_size);
        p.indices.reserve(nbrs.size());
        p.cloud.points.reserve(nbrs.size());
        for (const auto& nb : nbrs) {
            p.indices.push_back(nb.index);
            p.cloud.points.push_back(cloud.points[static_cast<std::size_t>(nb.index)]);
            covered[static_cast<std::size_t>(nb.index)] = true;
        }
        return p;
    };

    std::vector<Patch> patches;
    const auto seeds = farthest_point_sample(cloud, std::min(num_patches, N));
    for (const int s : seeds) patches.push_back(make_patch(s));

    if (cover) {
        // Keep seeding from the point farthest from any covered point until
        // every point lies in some patch.
        for (;;) {
            int best = -1;
            double best_d2 = -1.0;
            for (int i = 0; i < N; ++i) {
                if (covered[static_cast<std::size_t>(i)]) continue;
                double d2 = std::numeric_limits<double>::infinity();
                for (int j = 0; j < N; ++j) {
                    if (!covered[static_cast<std::size_t>(j)]) continue;
                    d2 = std::min(d2, (cloud.points[static_cast<std::size_t>(i)] -
                                       cloud.points[static_cast<std::size_t>(j)])
                                          .squaredNorm());
                }
                if (d2 > best_d2) {
                    best_d2 = d2;
                    best = i;
                }
            }
            if (best < 0) break;
            patches.push_back(make_patch(best));
        }
    }
    return patches;
}

PointCloud write_back(const PointCloud& original, const std::vector<Patch>& patches,
                      WriteBackMode mode) {
    PointCloud out = original;
    if (mode == WriteBackMode::last_write) {
        for (const auto& p : patches) {
            if (p.indices.size() != p.cloud.size())
                throw std::invalid_argument("write_back: patch index map size mismatch");
            for (std::size_t i = 0; i < p.indices.size(); ++i)
                out.points[static_cast<std::size_t>(p.indices[i])] = p.cloud.points[i];
        }
    } else {
        std::vector<Eigen::Vector3d> acc(original.size(), Eigen::Vector3d::Zero());
        std::vector<int> cnt(original.size(), 0);
        for (const auto& p : patches) {
            if (p.indices.size() != p.cloud.size())
                throw std::invalid_argument("write_back: patch index map size mismatch");
            for (std::size_t i = 0; i < p.indices.size(); ++i) {
                acc[static_cast<std::size_t>(p.indices[i])] += p.cloud.points[i];
                ++cnt[static_cast<std::size_t>(p.indices[i])];
            }
        }
        for (std::size_t i = 0; i < out.size(); ++i)
            if (cnt[i] > 0) out.points[i] = acc[i] / cnt[i];
    }
    return out;
}

} // namespace gfrs
