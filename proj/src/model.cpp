#include "gfrs/model.hpp"

#include "gfrs/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace gfrs {

namespace {

void add_linear(ad::ParameterSet& set, const std::string& name, int out, int in,
                int logical_fan_in, CounterRng& seeds) {
    set.add(name + ".w", ad::glorot_uniform(out, in, logical_fan_in, out, seeds.next_u64()));
    set.add(name + ".b", Eigen::MatrixXd::Zero(out, 1));
}

} // namespace

GradientFieldModel GradientFieldModel::init(const ModelConfig& cfg, std::uint64_t seed) {
    GradientFieldModel m;
    m.cfg = cfg;
    CounterRng seeds = CounterRng(seed).substream(0x6d6f64656cULL);

    const int w = ModelConfig::edge_width;
    // Layer 1 consumes relative coordinates only; layers 2-3 consume
    // [h_i ; h_j - h_i], split into a center part and a difference part.
    add_linear(m.params_h, "h1", w, 3, 3, seeds);
    for (const char* name : {"h2", "h3"}) {
        m.params_h.add(std::string(name) + ".wc",
                       ad::glorot_uniform(w, w, 2 * w, w, seeds.next_u64()));
        m.params_h.add(std::string(name) + ".wd",
                       ad::glorot_uniform(w, w, 2 * w, w, seeds.next_u64()));
        m.params_h.add(std::string(name) + ".b", Eigen::MatrixXd::Zero(w, 1));
    }

    const int hc = ModelConfig::ctx_width;
    const int hr = ModelConfig::rel_width;
    // F layer 1 is split into the coordinate part and the context part of
    // the logical [delta ; h] -> 128 map.
    m.params_f.add("f1.wx", ad::glorot_uniform(hr, 3, 3 + hc, hr, seeds.next_u64()));
    m.params_f.add("f1.wh", ad::glorot_uniform(hr, hc, 3 + hc, hr, seeds.next_u64()));
    m.params_f.add("f1.b", Eigen::MatrixXd::Zero(hr, 1));
    add_linear(m.params_f, "f2", hr, hr, hr, seeds);

    add_linear(m.params_m, "m1", ModelConfig::head_hidden, hr, hr, seeds);
    add_linear(m.params_m, "m2", 3, ModelConfig::head_hidden, ModelConfig::head_hidden, seeds);
    return m;
}

std::size_t GradientFieldModel::parameter_count() const {
    return params_h.scalar_count() + params_f.scalar_count() + params_m.scalar_count();
}

double cosine_weight(double dist, double r) {
    if (dist < 0.0) throw std::invalid_argument("cosine_weight: negative distance");
    if (r <= 0.0) throw std::invalid_argument("cosine_weight: r must be positive");
    if (dist > r) return 0.0;
    return 0.5 * (std::cos(M_PI * dist / r) + 1.0);
}

double context_radius(const ModelConfig& cfg, const PointCloud& context, const KdTree& index) {
    if (cfg.fixed_radius > 0.0) return cfg.fixed_radius;
    double sum = 0.0;
    for (std::size_t i = 0; i < context.size(); ++i) {
        const auto nb = index.knn(context.points[i], 2);
        sum += nb[1].distance; // nb[0] is the point itself
    }
    const double mean_spacing = sum / static_cast<double>(context.size());
    if (mean_spacing <= 0.0)
        throw std::invalid_argument("context_radius: degenerate context (all points coincide)");
    return cfg.radius_factor * mean_spacing;
}

std::vector<std::vector<int>> context_knn(const PointCloud& context, const KdTree& index,
                                          int k_feat) {
    const int n = static_cast<int>(context.size());
    if (n < k_feat + 1)
        throw std::invalid_argument("context_knn: context needs at least k_feat + 1 points");
    std::vector<std::vector<int>> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto nbrs = index.knn(context.points[static_cast<std::size_t>(i)], k_feat + 1);
        auto& row = idx[static_cast<std::size_t>(i)];
        row.reserve(static_cast<std::size_t>(k_feat));
        for (const auto& nb : nbrs) {
            if (nb.index == i) continue;
            if (static_cast<int>(row.size()) == k_feat) break;
            row.push_back(nb.index);
        }
        // When the query point appears several times, the self entry may be
        // absent from the k+1 list; trim to k_feat either way.
        if (static_cast<int>(row.size()) > k_feat) row.resize(static_cast<std::size_t>(k_feat));
    }
    return idx;
}

ModelLeaves bind_model(ad::Tape& tape, GradientFieldModel& model) {
    return ModelLeaves{tape.leaves(model.params_h), tape.leaves(model.params_f),
                       tape.leaves(model.params_m)};
}

ad::Value build_context_graph(ad::Tape& tape, const ModelLeaves& leaves,
                              const PointCloud& context,
                              const std::vector<std::vector<int>>& knn_idx, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("build_context_graph: radius must be positive");
    const int n = static_cast<int>(context.size());
    const int k = static_cast<int>(knn_idx.front().size());

    // Neighbor slot s as a gather index list over all points.
    std::vector<std::vector<int>> slot(static_cast<std::size_t>(k));
    for (auto& s : slot) s.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < k; ++s)
            slot[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)] =
                knn_idx[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)];

    // Layer 1: messages from relative coordinates (x_j - x_i) / radius.
    const Eigen::Matrix3Xd pts = context.as_matrix();
    std::vector<ad::Value> msgs;
    msgs.reserve(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
        Eigen::MatrixXd delta(3, n);
        for (int i = 0; i < n; ++i)
            delta.col(i) =
                (pts.col(slot[static_cast<std::size_t>(s)][static_cast<std::size_t>(i)]) - pts.col(i)) / radius;
        msgs.push_back(tape.relu(
            tape.linear(leaves.h.at("h1.w"), leaves.h.at("h1.b"), tape.constant(std::move(delta)))));
    }
    ad::Value h1 = tape.max_over_set(msgs);

    // Layers 2-3: messages from [h_i ; h_j - h_i]; the center term is hoisted
    // out of the per-slot loop.
    auto edge_layer = [&](ad::Value h_prev, const std::string& name) {
        ad::Value center = tape.matmul(leaves.h.at(name + ".wc"), h_prev);
        std::vector<ad::Value> ms;
        ms.reserve(static_cast<std::size_t>(k));
        for (int s = 0; s < k; ++s) {
            ad::Value diff =
                tape.sub(tape.gather_cols(h_prev, slot[static_cast<std::size_t>(s)]), h_prev);
            ms.push_back(tape.relu(tape.add_bias(
                tape.add(center, tape.matmul(leaves.h.at(name + ".wd"), diff)),
                leaves.h.at(name + ".b"))));
        }
        return tape.max_over_set(ms);
    };
    ad::Value h2 = edge_layer(h1, "h2");
    ad::Value h3 = edge_layer(h2, "h3");

    return tape.concat_rows({h1, h2, h3});
}

PairBatch gather_pairs(const KdTree& ctx_index, const std::vector<Eigen::Vector3d>& queries,
                       double radius, int k_max) {
    PairBatch batch;
    batch.offsets.reserve(queries.size() + 1);
    batch.offsets.push_back(0);
    for (const auto& q : queries) {
        const auto nbrs = ctx_index.radius_neighbors(q, radius, k_max);
        const int qi = static_cast<int>(batch.offsets.size()) - 1;
        for (const auto& nb : nbrs) {
            batch.query_of_pair.push_back(qi);
            batch.ctx_of_pair.push_back(nb.index);
        }
        batch.offsets.push_back(static_cast<int>(batch.query_of_pair.size()));
    }
    return batch;
}

FieldGraph build_field_graph(ad::Tape& tape, const ModelLeaves& leaves,
                             const PointCloud& context, ad::Value ctx_features,
                             const std::vector<Eigen::Vector3d>& queries, const PairBatch& pairs,
                             double radius, bool differentiable_queries) {
    const int q = static_cast<int>(queries.size());
    const int p = static_cast<int>(pairs.query_of_pair.size());

    Eigen::MatrixXd qpos(3, q);
    for (int i = 0; i < q; ++i) qpos.col(i) = queries[static_cast<std::size_t>(i)];

    Eigen::MatrixXd ctx_of_pairs(3, p);
    for (int i = 0; i < p; ++i)
        ctx_of_pairs.col(i) = context.points[static_cast<std::size_t>(pairs.ctx_of_pair[static_cast<std::size_t>(i)])];

    FieldGraph out;
    ad::Value delta;
    ad::Value w;
    if (differentiable_queries) {
        out.query_pos = tape.input(std::move(qpos));
        delta = tape.sub(tape.gather_cols(out.query_pos, pairs.query_of_pair),
                         tape.constant(std::move(ctx_of_pairs)));
        w = tape.cosine_window(tape.sqrt_elem(tape.sqnorm_cols(delta)), radius);
    } else {
        out.query_pos = tape.constant(qpos);
        Eigen::MatrixXd d(3, p);
        Eigen::MatrixXd wrow(1, p);
        for (int i = 0; i < p; ++i) {
            d.col(i) = qpos.col(pairs.query_of_pair[static_cast<std::size_t>(i)]) - ctx_of_pairs.col(i);
            wrow(0, i) = cosine_weight(d.col(i).norm(), radius);
        }
        delta = tape.constant(std::move(d));
        w = tape.constant(std::move(wrow));
    }

    // F: relu over (Wx * delta/r + gather(Wh * H) + b), then a second layer.
    // Offsets are measured in radius units so feature scales are independent
    // of the sampling density.
    ad::Value f1 = tape.affine_gather_relu(
        tape.matmul(leaves.f.at("f1.wx"), tape.scale(delta, 1.0 / radius)),
        tape.matmul(leaves.f.at("f1.wh"), ctx_features), pairs.ctx_of_pair,
        leaves.f.at("f1.b"));
    ad::Value f = tape.linear_relu(leaves.f.at("f2.w"), leaves.f.at("f2.b"), f1);

    out.aggregated = tape.segment_sum_weighted(f, w, pairs.offsets);
    // The head predicts the field in radius units; scale back to coordinates.
    out.g = tape.scale(
        tape.linear(leaves.m.at("m2.w"), leaves.m.at("m2.b"),
                    tape.relu(tape.linear(leaves.m.at("m1.w"), leaves.m.at("m1.b"),
                                          out.aggregated))),
        radius);
    return out;
}

ContextFeatures extract_context_features(const GradientFieldModel& model,
                                         const PointCloud& context) {
    if (static_cast<int>(context.size()) < model.cfg.k_feat + 1)
        throw std::invalid_argument("extract_context_features: too few context points");

    ContextFeatures ctx;
    ctx.cloud = context;
    ctx.index = std::make_shared<KdTree>(context);
    ctx.radius = context_radius(model.cfg, context, *ctx.index);

    const auto idx = context_knn(context, *ctx.index, model.cfg.k_feat);
    ad::Tape tape;
    // Forward only; const_cast is confined to leaf binding, values are read.
    ModelLeaves leaves = bind_model(tape, const_cast<GradientFieldModel&>(model));
    ad::Value h = build_context_graph(tape, leaves, context, idx, ctx.radius);
    ctx.features = h->value;
    return ctx;
}

Eigen::Matrix3Xd estimate_gradients(const GradientFieldModel& model, const ContextFeatures& ctx,
                                    const std::vector<Eigen::Vector3d>& queries) {
    // Evaluate in bounded chunks so the intermediate tensors stay small on
    // large clouds.
    constexpr std::size_t chunk = 4096;
    Eigen::Matrix3Xd g(3, static_cast<Eigen::Index>(queries.size()));
    for (std::size_t start = 0; start < queries.size(); start += chunk) {
        const std::size_t n = std::min(chunk, queries.size() - start);
        const std::vector<Eigen::Vector3d> part(queries.begin() + static_cast<std::ptrdiff_t>(start),
                                                queries.begin() + static_cast<std::ptrdiff_t>(start + n));
        const PairBatch pairs = gather_pairs(*ctx.index, part, ctx.radius, model.cfg.k_max);
        ad::Tape tape;
        ModelLeaves leaves = bind_model(tape, const_cast<GradientFieldModel&>(model));
        FieldGraph fg = build_field_graph(tape, leaves, ctx.cloud, tape.constant(ctx.features),
                                          part, pairs, ctx.radius, false);
        g.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = fg.g->value;
    }
    return g;
}

Eigen::Vector3d estimate_gradient(const GradientFieldModel& model, const Eigen::Vector3d& x,
                                  const ContextFeatures& ctx) {
    return estimate_gradients(model, ctx, {x}).col(0);
}

Eigen::VectorXd aggregated_feature(const GradientFieldModel& model, const Eigen::Vector3d& x,
                                   const ContextFeatures& ctx) {
    const std::vector<Eigen::Vector3d> queries{x};
    const PairBatch pairs = gather_pairs(*ctx.index, queries, ctx.radius, model.cfg.k_max);
    ad::Tape tape;
    ModelLeaves leaves = bind_model(tape, const_cast<GradientFieldModel&>(model));
    FieldGraph fg = build_field_graph(tape, leaves, ctx.cloud, tape.constant(ctx.features),
                                      queries, pairs, ctx.radius, false);
    return fg.aggregated->value.col(0);
}

} // namespace gfrs
