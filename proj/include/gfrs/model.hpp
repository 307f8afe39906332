#ifndef GFRS_MODEL_HPP
#define GFRS_MODEL_HPP

#include "gfrs/autodiff.hpp"
#include "gfrs/kdtree.hpp"
#include "gfrs/point_cloud.hpp"

#include <memory>

namespace gfrs {

struct ModelConfig {
    int k_feat = 16;          // neighbors per edge-convolution
    int k_max = 32;           // cap on context points aggregated per query
    double radius_factor = 3.0; // r = factor * mean nearest-neighbor spacing
    double fixed_radius = 0.0;  // > 0 overrides the factor policy

    // Widths are fixed by the architecture:
    // H: three width-32 edge convolutions, densely concatenated -> 96
    // F: [delta(3); h(96)] -> 128 -> 128
    // M: 128 -> 64 -> 3
    static constexpr int edge_width = 32;
    static constexpr int ctx_width = 96;
    static constexpr int rel_width = 128;
    static constexpr int head_hidden = 64;
};

/// All learnable state: context extractor H, relative-feature unit F, and
/// global head M, plus the neighborhood policy.
struct GradientFieldModel {
    ModelConfig cfg;
    ad::ParameterSet params_h;
    ad::ParameterSet params_f;
    ad::ParameterSet params_m;

    static GradientFieldModel init(const ModelConfig& cfg, std::uint64_t seed);
    std::size_t parameter_count() const;
};

/// Per-point context features; computed once per restoration run and frozen.
struct ContextFeatures {
    PointCloud cloud;
    std::shared_ptr<const KdTree> index;
    Eigen::MatrixXd features; // ctx_width x N
    double radius = 0.0;
};

/// 0.5*(cos(pi*d/r)+1) for d <= r; 0 beyond r.
double cosine_weight(double dist, double r);

/// Neighborhood radius for a context cloud under the model's policy.
double context_radius(const ModelConfig& cfg, const PointCloud& context, const KdTree& index);

/// Runs the edge-convolution stack H over the context. Requires at least
/// k_feat + 1 points.
ContextFeatures extract_context_features(const GradientFieldModel& model,
                                         const PointCloud& context);

/// g(x) for a batch of query positions (3xQ result).
Eigen::Matrix3Xd estimate_gradients(const GradientFieldModel& model, const ContextFeatures& ctx,
                                    const std::vector<Eigen::Vector3d>& queries);

Eigen::Vector3d estimate_gradient(const GradientFieldModel& model, const Eigen::Vector3d& x,
                                  const ContextFeatures& ctx);

/// Aggregated feature F(x) (rel_width vector); zero when no context point
/// lies within the radius.
Eigen::VectorXd aggregated_feature(const GradientFieldModel& model, const Eigen::Vector3d& x,
                                   const ContextFeatures& ctx);

// --- tape-level graph builders (shared by inference, training and the
// finite-difference checks) ---

struct ModelLeaves {
    std::map<std::string, ad::Value> h, f, m;
};

ModelLeaves bind_model(ad::Tape& tape, GradientFieldModel& model);

/// H forward over the context; knn_idx[i] holds the k_feat neighbor indices
/// of context point i (self excluded). Relative coordinates are measured in
/// units of `radius` so feature scales are independent of the cloud's
/// sampling density. Returns ctx_width x N.
ad::Value build_context_graph(ad::Tape& tape, const ModelLeaves& leaves,
                              const PointCloud& context,
                              const std::vector<std::vector<int>>& knn_idx, double radius);

/// Query/context pairs, grouped contiguously by query.
struct PairBatch {
    std::vector<int> query_of_pair;
    std::vector<int> ctx_of_pair;
    std::vector<int> offsets; // size Q+1
};

PairBatch gather_pairs(const KdTree& ctx_index, const std::vector<Eigen::Vector3d>& queries,
                       double radius, int k_max);

struct FieldGraph {
    ad::Value g;          // 3 x Q
    ad::Value aggregated; // rel_width x Q
    ad::Value query_pos;  // 3 x Q input leaf when differentiable, else constant
};

/// F and M forward for a query batch. When differentiable_queries is set the
/// query positions are an input leaf and the cosine weights are part of the
/// graph; otherwise both are constants (the training case).
FieldGraph build_field_graph(ad::Tape& tape, const ModelLeaves& leaves,
                             const PointCloud& context, ad::Value ctx_features,
                             const std::vector<Eigen::Vector3d>& queries, const PairBatch& pairs,
                             double radius, bool differentiable_queries);

/// k_feat-nearest-neighbor indices (self excluded) for every context point.
std::vector<std::vector<int>> context_knn(const PointCloud& context, const KdTree& index,
                                          int k_feat);

} // namespace gfrs

#endif
