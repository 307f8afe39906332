#ifndef GFRS_TRAINING_HPP
#define GFRS_TRAINING_HPP

#include "gfrs/model.hpp"
#include "gfrs/point_cloud.hpp"
#include "gfrs/rng.hpp"

#include <string>
#include <vector>

namespace gfrs {

enum class TrainTask { denoise, upsample };

struct TrainConfig {
    double lr = 5e-4;
    int iterations = 2000;
    int patch_size = 1024;
    int queries_per_point = 4;
    /// Per-iteration cap on the query batch; the full query set is drawn and
    /// then uniformly subsampled to this size. 0 disables the cap.
    int max_queries = 1024;
    double noise_lo = 0.005;
    double noise_hi = 0.03;
    std::uint64_t seed = 0;
    TrainTask task = TrainTask::denoise;
    int upsample_ratio = 4;       // upsample task only
    double upsample_sigma = 0.02; // upsample task only
    std::string trace_path;       // loss trace file, empty = none
};

/// s(x) = NN(x, Y) - x, the vector from x to the nearest ground-truth point.
Eigen::Vector3d target_gradient(const Eigen::Vector3d& x, const KdTree& ground_truth);
Eigen::Vector3d target_gradient(const Eigen::Vector3d& x, const PointCloud& ground_truth);

/// Each degraded point plus (queries_per_point - 1) isotropic Gaussian
/// jitters of the given std.
std::vector<Eigen::Vector3d> sample_queries(const PointCloud& degraded, int queries_per_point,
                                            double jitter_std, CounterRng& rng);

/// Mean over queries of ||s(x) - g(x)||^2.
double loss(const GradientFieldModel& model, const ContextFeatures& ctx,
            const std::vector<Eigen::Vector3d>& queries, const PointCloud& ground_truth);

struct TrainResult {
    GradientFieldModel model;
    std::vector<double> loss_trace;
};

/// Gradient-field training: per iteration sample a cloud and patch, degrade
/// it, extract context features, draw queries, step SGD on the field loss.
TrainResult train(const std::vector<PointCloud>& clean_clouds, const TrainConfig& cfg,
                  const ModelConfig& model_cfg = ModelConfig{});

} // namespace gfrs

#endif
