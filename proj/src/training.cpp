#include "gfrs/training.hpp"

#include "gfrs/noise.hpp"
#include "gfrs/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <utility>

namespace gfrs {

Eigen::Vector3d target_gradient(const Eigen::Vector3d& x, const KdTree& ground_truth) {
    const Neighbor nb = ground_truth.nearest(x);
    return ground_truth.point(nb.index) - x;
}

Eigen::Vector3d target_gradient(const Eigen::Vector3d& x, const PointCloud& ground_truth) {
    if (ground_truth.points.empty()) throw std::invalid_argument("target_gradient: empty cloud");
    return target_gradient(x, KdTree(ground_truth));
}

std::vector<Eigen::Vector3d> sample_queries(const PointCloud& degraded, int queries_per_point,
                                            double jitter_std, CounterRng& rng) {
    if (degraded.points.empty()) throw std::invalid_argument("sample_queries: empty cloud");
    if (queries_per_point < 1)
        throw std::invalid_argument("sample_queries: queries_per_point must be >= 1");
    std::vector<Eigen::Vector3d> queries;
    queries.reserve(degraded.size() * static_cast<std::size_t>(queries_per_point));
    for (const auto& p : degraded.points) {
        queries.push_back(p);
        for (int j = 1; j < queries_per_point; ++j)
            queries.push_back(p + jitter_std * Eigen::Vector3d(rng.gaussian(), rng.gaussian(),
                                                               rng.gaussian()));
    }
    return queries;
}

namespace {

Eigen::MatrixXd targets_for(const std::vector<Eigen::Vector3d>& queries, const KdTree& gt) {
    Eigen::MatrixXd t(3, static_cast<Eigen::Index>(queries.size()));
    for (std::size_t i = 0; i < queries.size(); ++i)
        t.col(static_cast<Eigen::Index>(i)) = target_gradient(queries[i], gt);
    return t;
}

// Builds the full differentiable loss graph and returns the scalar node.
ad::Value build_loss(ad::Tape& tape, GradientFieldModel& model, const PointCloud& context,
                     const KdTree& ctx_index, double radius,
                     const std::vector<Eigen::Vector3d>& queries, const Eigen::MatrixXd& targets) {
    const auto knn_idx = context_knn(context, ctx_index, model.cfg.k_feat);
    ModelLeaves leaves = bind_model(tape, model);
    ad::Value h = build_context_graph(tape, leaves, context, knn_idx, radius);
    const PairBatch pairs = gather_pairs(ctx_index, queries, radius, model.cfg.k_max);
    FieldGraph fg =
        build_field_graph(tape, leaves, context, h, queries, pairs, radius, false);
    // Mean over queries of the squared field error.
    return tape.scale(tape.sum_sq(tape.sub(fg.g, tape.constant(targets))),
                      1.0 / static_cast<double>(queries.size()));
}

} // namespace

double loss(const GradientFieldModel& model, const ContextFeatures& ctx,
            const std::vector<Eigen::Vector3d>& queries, const PointCloud& ground_truth) {
    if (queries.empty()) throw std::invalid_argument("loss: no queries");
    const KdTree gt(ground_truth);
    const Eigen::MatrixXd targets = targets_for(queries, gt);
    const Eigen::Matrix3Xd g = estimate_gradients(model, ctx, queries);
    return (g - targets).squaredNorm() / static_cast<double>(queries.size());
}

TrainResult train(const std::vector<PointCloud>& clean_clouds, const TrainConfig& cfg,
                  const ModelConfig& model_cfg) {
    if (clean_clouds.empty()) throw std::invalid_argument("train: need at least one cloud");
    if (cfg.lr < 0.0 || cfg.iterations < 0 || cfg.patch_size < 1 || cfg.queries_per_point < 1 ||
        cfg.max_queries < 0 || cfg.noise_lo <= 0.0 || cfg.noise_hi < cfg.noise_lo)
        throw std::invalid_argument("train: invalid configuration");

    // Pre-extract patches (FPS-seeded kNN balls) and parent radii.
    struct Prepared {
        std::vector<PointCloud> patches;
        double radius;
    };
    std::vector<Prepared> data;
    for (const auto& cloud : clean_clouds) {
        if (static_cast<int>(cloud.size()) < cfg.patch_size)
            throw std::invalid_argument("train: cloud smaller than patch size");
        Prepared prep;
        prep.radius = cloud.bounding_radius();
        const int num = std::max(1, static_cast<int>(cloud.size()) / cfg.patch_size);
        for (auto& p : extract_patches(cloud, cfg.patch_size, num)) prep.patches.push_back(std::move(p.cloud));
        data.push_back(std::move(prep));
    }

    TrainResult result{GradientFieldModel::init(model_cfg, cfg.seed), {}};
    result.loss_trace.reserve(static_cast<std::size_t>(cfg.iterations));
    GradientFieldModel& model = result.model;

    const CounterRng base(cfg.seed);
    for (int it = 0; it < cfg.iterations; ++it) {
        CounterRng rng = base.substream(static_cast<std::uint64_t>(it) + 1);

        const auto& prep = data[rng.uniform_index(data.size())];
        const PointCloud& clean_patch = prep.patches[rng.uniform_index(prep.patches.size())];

        PointCloud degraded;   // X (also the context X_C)
        PointCloud context;
        const PointCloud* target_cloud = &clean_patch;
        PointCloud sparse;
        if (cfg.task == TrainTask::denoise) {
            NoiseSpec spec;
            spec.kind = NoiseKind::isotropic_gaussian;
            spec.scale = rng.uniform(cfg.noise_lo, cfg.noise_hi);
            spec.seed = rng.next_u64();
            // Noise is scaled to the parent cloud's radius so patch training
            // matches whole-cloud inference.
            degraded = apply_noise(clean_patch, spec, prep.radius);
            context = degraded;
        } else {
            const int sparse_n = std::max(model_cfg.k_feat + 1,
                                          cfg.patch_size / cfg.upsample_ratio);
            const auto keep = farthest_point_sample(clean_patch, sparse_n);
            for (const int i : keep) sparse.points.push_back(clean_patch.points[static_cast<std::size_t>(i)]);
            degraded = naive_upsample_init(sparse, cfg.upsample_ratio, cfg.upsample_sigma,
                                           rng.next_u64());
            context = sparse;
        }

        // Train in the radius-normalized frame: scale the patch so the
        // neighborhood radius is 1. The model is scale-consistent (relative
        // coordinates are measured in radius units and the field output is
        // scaled back by the radius), so this only changes the scale of the
        // loss, keeping gradient magnitudes independent of patch density.
        {
            const KdTree raw_index(context);
            const double world_radius = context_radius(model.cfg, context, raw_index);
            const double s = 1.0 / world_radius;
            for (auto& p : degraded.points) p *= s;
            for (auto& p : context.points) p *= s;
            sparse = *target_cloud; // scratch copy holding the scaled target
            for (auto& p : sparse.points) p *= s;
            target_cloud = &sparse;
        }
        const double radius = 1.0;
        const KdTree ctx_index(context);
        auto queries = sample_queries(degraded, cfg.queries_per_point, radius / 3.0, rng);
        if (cfg.max_queries > 0 && static_cast<int>(queries.size()) > cfg.max_queries) {
            // Uniform subsample (partial Fisher-Yates) to bound the batch cost.
            for (int i = 0; i < cfg.max_queries; ++i)
                std::swap(queries[static_cast<std::size_t>(i)],
                          queries[static_cast<std::size_t>(i) +
                                  rng.uniform_index(queries.size() - static_cast<std::size_t>(i))]);
            queries.resize(static_cast<std::size_t>(cfg.max_queries));
        }
        const KdTree gt_index(*target_cloud);
        const Eigen::MatrixXd targets = targets_for(queries, gt_index);

        ad::Tape tape;
        ad::Value l = build_loss(tape, model, context, ctx_index, radius, queries, targets);
        result.loss_trace.push_back(l->value(0, 0));
        tape.backward(l);
        sgd_step(model.params_h, cfg.lr);
        sgd_step(model.params_f, cfg.lr);
        sgd_step(model.params_m, cfg.lr);
        zero_grad(model.params_h);
        zero_grad(model.params_f);
        zero_grad(model.params_m);
    }

    if (!cfg.trace_path.empty()) {
        std::ofstream out(cfg.trace_path);
        if (!out) throw std::runtime_error("train: cannot open trace file " + cfg.trace_path);
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
            out << i << " " << result.loss_trace[i] << "\n";
    }
    return result;
}

} // namespace gfrs
