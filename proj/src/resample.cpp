#include "gfrs/resample.hpp"

#include "gfrs/graph.hpp"
#include "gfrs/noise.hpp"

#include <stdexcept>

namespace gfrs {

namespace {

void validate(const ResampleConfig& cfg) {
    if (!(cfg.alpha1 > 0.0 && cfg.alpha1 < 1.0))
        throw std::invalid_argument("resample: alpha1 must lie in (0, 1)");
    if (!(cfg.decay > 0.0 && cfg.decay <= 1.0))
        throw std::invalid_argument("resample: decay must lie in (0, 1]");
    if (cfg.steps < 0) throw std::invalid_argument("resample: steps must be >= 0");
    if (cfg.lambda < 0.0) throw std::invalid_argument("resample: lambda must be >= 0");
}

Eigen::MatrixXd cloud_signal(const PointCloud& c) {
    return c.as_matrix().transpose(); // n x 3 for the Laplacian solve
}

void set_points(PointCloud& c, const Eigen::MatrixXd& signal) {
    for (std::size_t i = 0; i < c.size(); ++i)
        c.points[i] = signal.row(static_cast<Eigen::Index>(i)).transpose();
}

} // namespace

PointCloud resample_with_field(const FieldFn& field, const PointCloud& query,
                               const ResampleConfig& cfg, ResampleStats* stats) {
    validate(cfg);
    PointCloud current = query;

    Laplacian fixed_lap;
    if (cfg.reg == Regularizer::glr && cfg.steps > 0) {
        fixed_lap = laplacian(build_knn_graph(query, cfg.graph_k));
        if (stats) ++stats->graph_builds;
    }

    double alpha = cfg.alpha1;
    for (int t = 1; t <= cfg.steps; ++t) {
        const Eigen::Matrix3Xd g = field(current);
        for (std::size_t i = 0; i < current.size(); ++i)
            current.points[i] += alpha * g.col(static_cast<Eigen::Index>(i));

        if (cfg.reg == Regularizer::glr) {
            set_points(current, solve_regularized(fixed_lap, cloud_signal(current), cfg.lambda));
            if (stats) ++stats->solves;
        } else if (cfg.reg == Regularizer::rglr) {
            const Laplacian lap = laplacian(build_knn_graph(current, cfg.graph_k));
            if (stats) ++stats->graph_builds;
            try {
                set_points(current, solve_regularized(lap, cloud_signal(current), cfg.lambda));
            } catch (const NumericalError& e) {
                throw NumericalError(std::string(e.what()) + " at step " + std::to_string(t),
                                     e.residual);
            }
            if (stats) ++stats->solves;
        }

        alpha *= cfg.decay;
        if (cfg.on_step && cfg.dump_every > 0 && (t % cfg.dump_every == 0 || t == cfg.steps))
            cfg.on_step(t, current);
    }
    return current;
}

PointCloud resample(const GradientFieldModel& model, const PointCloud& query,
                    const PointCloud& context, const ResampleConfig& cfg, ResampleStats* stats) {
    if (context.points.empty()) throw std::invalid_argument("resample: empty context");
    const ContextFeatures ctx = extract_context_features(model, context);
    const FieldFn field = [&](const PointCloud& cloud) {
        return estimate_gradients(model, ctx, cloud.points);
    };
    return resample_with_field(field, query, cfg, stats);
}

PointCloud denoise(const GradientFieldModel& model, const PointCloud& noisy,
                   const ResampleConfig& cfg, ResampleStats* stats) {
    return resample(model, noisy, noisy, cfg, stats);
}

PointCloud upsample(const GradientFieldModel& model, const PointCloud& sparse, int ratio,
                    double init_sigma, std::uint64_t seed, const ResampleConfig& cfg,
                    ResampleStats* stats) {
    const PointCloud init = naive_upsample_init(sparse, ratio, init_sigma, seed);
    return resample(model, init, sparse, cfg, stats);
}

} // namespace gfrs
