#ifndef GFRS_RESAMPLE_HPP
#define GFRS_RESAMPLE_HPP

#include "gfrs/model.hpp"
#include "gfrs/point_cloud.hpp"

#include <functional>

namespace gfrs {

enum class Regularizer { none, glr, rglr };

struct ResampleConfig {
    double alpha1 = 0.15; // initial step size, in (0, 1)
    double decay = 0.95;  // step decay per iteration, in (0, 1]
    int steps = 50;
    Regularizer reg = Regularizer::none;
    double lambda = 0.1;
    int graph_k = 8;
    /// Called after every dump_every-th step (and the final one) when set.
    int dump_every = 0;
    std::function<void(int step, const PointCloud&)> on_step;
};

struct ResampleStats {
    int graph_builds = 0;
    int solves = 0;
};

/// A gradient field evaluated on a whole cloud at once (3 x N result).
using FieldFn = std::function<Eigen::Matrix3Xd(const PointCloud&)>;

/// Gradient-ascent restoration: x <- x + alpha_t * field(x) per step, the
/// step size decaying geometrically, optionally alternated with a graph
/// Laplacian smoothing solve. GLR keeps the Laplacian of the input cloud for
/// all steps; RGLR rebuilds graph and Laplacian from the intermediate cloud
/// every step.
PointCloud resample_with_field(const FieldFn& field, const PointCloud& query,
                               const ResampleConfig& cfg, ResampleStats* stats = nullptr);

/// Field from a trained model; context features are extracted once before
/// the loop and frozen.
PointCloud resample(const GradientFieldModel& model, const PointCloud& query,
                    const PointCloud& context, const ResampleConfig& cfg,
                    ResampleStats* stats = nullptr);

/// Denoising: context = query = the noisy cloud.
PointCloud denoise(const GradientFieldModel& model, const PointCloud& noisy,
                   const ResampleConfig& cfg, ResampleStats* stats = nullptr);

/// Upsampling: Gaussian-jittered copies of the sparse cloud are resampled
/// against the sparse clean cloud as context.
PointCloud upsample(const GradientFieldModel& model, const PointCloud& sparse, int ratio,
                    double init_sigma, std::uint64_t seed, const ResampleConfig& cfg,
                    ResampleStats* stats = nullptr);

} // namespace gfrs

#endif
