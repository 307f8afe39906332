#ifndef GFRS_AUTODIFF_HPP
#define GFRS_AUTODIFF_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace gfrs::ad {

/// A trainable tensor that persists across tapes. Gradients accumulate into
/// `grad` on backward and stay until zero_grad.
struct Parameter {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;

    explicit Parameter(Eigen::MatrixXd v)
        : value(std::move(v)), grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())) {}
};

/// Named parameters with deterministic (name-ordered) iteration.
class ParameterSet {
public:
    Parameter& add(const std::string& name, Eigen::MatrixXd init);
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }
    std::size_t size() const { return items_.size(); }
    std::size_t scalar_count() const;

private:
    std::map<std::string, std::unique_ptr<Parameter>> items_;
};

/// p <- p - lr * grad(p); gradients are left untouched.
void sgd_step(ParameterSet& params, double lr);
void zero_grad(ParameterSet& params);

class Tape;

struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad; // allocated on demand during backward
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void()> backprop; // empty for leaves

    Eigen::Index rows() const { return value.rows(); }
    Eigen::Index cols() const { return value.cols(); }
    Eigen::MatrixXd& ensure_grad();
};

using Value = Node*;

/// Dynamic reverse-mode tape. Nodes are owned by the tape and valid for its
/// lifetime; a tape instance is single-threaded.
class Tape {
public:
    Value constant(Eigen::MatrixXd v);
    /// Differentiable non-parameter leaf (e.g. query positions).
    Value input(Eigen::MatrixXd v);
    /// Leaf bound to a persistent parameter; backward accumulates into it.
    Value leaf(Parameter& p);
    /// Binds every parameter of a set; returns name -> leaf.
    std::map<std::string, Value> leaves(ParameterSet& params);

    Value matmul(Value a, Value b);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    /// x + b broadcast over columns (b is a column vector).
    Value add_bias(Value x, Value b);
    Value linear(Value w, Value b, Value x) { return add_bias(matmul(w, x), b); }
    Value relu(Value x);
    /// relu(w x + b) as one node; avoids materializing the pre-activation.
    Value linear_relu(Value w, Value b, Value x);
    /// relu(a + src[:, idx] + b) as one node (b broadcast over columns).
    Value affine_gather_relu(Value a, Value src, std::vector<int> idx, Value b);
    /// Weighted segment sum: out[:, s] = sum over columns c in
    /// [offsets[s], offsets[s+1]) of w(0, c) * x(:, c).
    Value segment_sum_weighted(Value x, Value w, std::vector<int> offsets);
    Value scale(Value x, double c);
    Value concat_rows(const std::vector<Value>& xs);
    Value gather_cols(Value x, std::vector<int> idx);
    /// Elementwise max over same-shape tensors; ties route the gradient to
    /// the lowest set index.
    Value max_over_set(const std::vector<Value>& xs);
    /// sum_i w_i (x) x_i with each w either 1x1 or a 1xB row broadcast over
    /// rows. Weights receive gradients only when their nodes require grad.
    Value sum_weighted(const std::vector<Value>& ws, const std::vector<Value>& xs);
    /// x scaled per column by the 1xB row w.
    Value colwise_scale(Value x, Value w);
    /// Sums column ranges [offsets[s], offsets[s+1]) into segment s; empty
    /// segments yield zero columns.
    Value segment_sum_cols(Value x, std::vector<int> offsets);
    /// 1xB row of per-column squared norms.
    Value sqnorm_cols(Value x);
    Value sqrt_elem(Value x);
    /// Elementwise 0.5*(cos(pi*d/r)+1) for d <= r, 0 beyond r.
    Value cosine_window(Value d, double r);
    /// Sum of squared entries (1x1).
    Value sum_sq(Value x);
    /// Mean squared error over all entries (1x1).
    Value mse(Value pred, Value target);

    /// Accumulates d(loss)/dp into every reachable parameter and input leaf.
    /// Repeated calls without zeroing add. Throws std::invalid_argument if
    /// loss is not 1x1.
    void backward(Value loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    Value make(Eigen::MatrixXd v, bool requires_grad);
    std::vector<std::unique_ptr<Node>> nodes_;
};

/// Uniform +-sqrt(6/(fan_in+fan_out)) initialization.
Eigen::MatrixXd glorot_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in,
                               Eigen::Index fan_out, std::uint64_t seed);

} // namespace gfrs::ad

#endif
