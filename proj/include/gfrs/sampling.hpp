#ifndef GFRS_SAMPLING_HPP
#define GFRS_SAMPLING_HPP

#include "gfrs/kdtree.hpp"
#include "gfrs/point_cloud.hpp"

#include <vector>

namespace gfrs {

/// Greedy farthest-point sampling. The first pick is index 0; each later pick
/// maximizes the minimum distance to the already-picked set, ties toward the
/// smaller index. Deterministic for a fixed input ordering.
std::vector<int> farthest_point_sample(const PointCloud& cloud, int n);

struct Patch {
    PointCloud cloud;
    std::vector<int> indices; // patch point -> index in the source cloud
    int seed_index = -1;
};

/// Patches are the patch_size nearest neighbors of farthest-point-sampled
/// seeds. With `cover` set, seeding continues from uncovered points until
/// every point belongs to at least one patch (the patch count may then exceed
/// num_patches).
std::vector<Patch> extract_patches(const PointCloud& cloud, int patch_size, int num_patches,
                                   bool cover = false);

enum class WriteBackMode { last_write, average };

/// Writes patch coordinates back into a copy of the source cloud through the
/// patch index maps. Overlapping points take the last patch's value or the
/// average of all contributions.
PointCloud write_back(const PointCloud& original, const std::vector<Patch>& patches,
                      WriteBackMode mode = WriteBackMode::last_write);

} // namespace gfrs

#endif
