#include "gfrs/autodiff.hpp"

#include "gfrs/rng.hpp"

#include <cmath>
#include <stdexcept>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace gfrs::ad {

namespace {

// Tape tensors are tens of megabytes and are allocated and freed every
// iteration; without these thresholds glibc serves them via mmap/munmap and
// page-fault churn dominates the runtime.
const bool allocator_tuned = [] {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
    return true;
}();

} // namespace

Parameter& ParameterSet::add(const std::string& name, Eigen::MatrixXd init) {
    auto [it, inserted] = items_.emplace(name, std::make_unique<Parameter>(std::move(init)));
    if (!inserted) throw std::invalid_argument("ParameterSet::add: duplicate name " + name);
    return *it->second;
}

Parameter& ParameterSet::at(const std::string& name) {
    auto it = items_.find(name);
    if (it == items_.end()) throw std::invalid_argument("ParameterSet::at: unknown name " + name);
    return *it->second;
}

const Parameter& ParameterSet::at(const std::string& name) const {
    auto it = items_.find(name);
    if (it == items_.end()) throw std::invalid_argument("ParameterSet::at: unknown name " + name);
    return *it->second;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : items_) n += static_cast<std::size_t>(p->value.size());
    return n;
}

void sgd_step(ParameterSet& params, double lr) {
    for (auto& [name, p] : params) p->value -= lr * p->grad;
}

void zero_grad(ParameterSet& params) {
    for (auto& [name, p] : params) p->grad.setZero();
}

Eigen::MatrixXd& Node::ensure_grad() {
    if (grad.size() == 0) grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
    return grad;
}

Value Tape::make(Eigen::MatrixXd v, bool requires_grad) {
    auto node = std::make_unique<Node>();
    node->value = std::move(v);
    node->requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return nodes_.back().get();
}

Value Tape::constant(Eigen::MatrixXd v) { return make(std::move(v), false); }

Value Tape::input(Eigen::MatrixXd v) { return make(std::move(v), true); }

Value Tape::leaf(Parameter& p) {
    Value v = make(p.value, true);
    v->param = &p;
    return v;
}

std::map<std::string, Value> Tape::leaves(ParameterSet& params) {
    std::map<std::string, Value> out;
    for (auto& [name, p] : params) out.emplace(name, leaf(*p));
    return out;
}

Value Tape::matmul(Value a, Value b) {
    if (a->cols() != b->rows()) throw std::invalid_argument("matmul: shape mismatch");
    Value out = make(a->value * b->value, a->requires_grad || b->requires_grad);
    if (out->requires_grad)
        out->backprop = [a, b, out] {
            if (a->requires_grad) a->ensure_grad().noalias() += out->grad * b->value.transpose();
            if (b->requires_grad) b->ensure_grad().noalias() += a->value.transpose() * out->grad;
        };
    return out;
}

Value Tape::add(Value a, Value b) {
    if (a->rows() != b->rows() || a->cols() != b->cols())
        throw std::invalid_argument("add: shape mismatch");
    Value out = make(a->value + b->value, a->requires_grad || b->requires_grad);
    if (out->requires_grad)
        out->backprop = [a, b, out] {
            if (a->requires_grad) a->ensure_grad() += out->grad;
            if (b->requires_grad) b->ensure_grad() += out->grad;
        };
    return out;
}

Value Tape::sub(Value a, Value b) {
    if (a->rows() != b->rows() || a->cols() != b->cols())
        throw std::invalid_argument("sub: shape mismatch");
    Value out = make(a->value - b->value, a->requires_grad || b->requires_grad);
    if (out->requires_grad)
        out->backprop = [a, b, out] {
            if (a->requires_grad) a->ensure_grad() += out->grad;
            if (b->requires_grad) b->ensure_grad() -= out->grad;
        };
    return out;
}

Value Tape::add_bias(Value x, Value b) {
    if (b->cols() != 1 || b->rows() != x->rows())
        throw std::invalid_argument("add_bias: bias must be a matching column vector");
    Value out = make(x->value.colwise() + Eigen::VectorXd(b->value.col(0)),
                     x->requires_grad || b->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, b, out] {
            if (x->requires_grad) x->ensure_grad() += out->grad;
            if (b->requires_grad) b->ensure_grad() += out->grad.rowwise().sum();
        };
    return out;
}

Value Tape::relu(Value x) {
    Value out = make(x->value.cwiseMax(0.0), x->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, out] {
            x->ensure_grad().array() +=
                out->grad.array() * (x->value.array() > 0.0).cast<double>();
        };
    return out;
}

Value Tape::linear_relu(Value w, Value b, Value x) {
    if (w->cols() != x->rows()) throw std::invalid_argument("linear_relu: shape mismatch");
    if (b->cols() != 1 || b->rows() != w->rows())
        throw std::invalid_argument("linear_relu: bias must be a matching column vector");
    Eigen::MatrixXd v = w->value * x->value;
    v.colwise() += Eigen::VectorXd(b->value.col(0));
    v = v.cwiseMax(0.0);
    Value out = make(std::move(v), w->requires_grad || b->requires_grad || x->requires_grad);
    if (out->requires_grad)
        out->backprop = [w, b, x, out] {
            const Eigen::MatrixXd masked =
                (out->value.array() > 0.0).select(out->grad, Eigen::MatrixXd::Zero(out->rows(), out->cols()));
            if (w->requires_grad) w->ensure_grad().noalias() += masked * x->value.transpose();
            if (b->requires_grad) b->ensure_grad() += masked.rowwise().sum();
            if (x->requires_grad) x->ensure_grad().noalias() += w->value.transpose() * masked;
        };
    return out;
}

Value Tape::affine_gather_relu(Value a, Value src, std::vector<int> idx, Value b) {
    if (static_cast<Eigen::Index>(idx.size()) != a->cols() || src->rows() != a->rows())
        throw std::invalid_argument("affine_gather_relu: shape mismatch");
    if (b->cols() != 1 || b->rows() != a->rows())
        throw std::invalid_argument("affine_gather_relu: bias must be a matching column vector");
    Eigen::MatrixXd v(a->rows(), a->cols());
    const Eigen::VectorXd bias = b->value.col(0);
    for (std::size_t c = 0; c < idx.size(); ++c) {
        if (idx[c] < 0 || idx[c] >= src->cols())
            throw std::invalid_argument("affine_gather_relu: index out of range");
        v.col(static_cast<Eigen::Index>(c)) =
            (a->value.col(static_cast<Eigen::Index>(c)) + src->value.col(idx[c]) + bias).cwiseMax(0.0);
    }
    Value out = make(std::move(v),
                     a->requires_grad || src->requires_grad || b->requires_grad);
    if (out->requires_grad)
        out->backprop = [a, src, b, out, idx = std::move(idx)] {
            const Eigen::MatrixXd masked =
                (out->value.array() > 0.0).select(out->grad, Eigen::MatrixXd::Zero(out->rows(), out->cols()));
            if (a->requires_grad) a->ensure_grad() += masked;
            if (src->requires_grad) {
                auto& g = src->ensure_grad();
                for (std::size_t c = 0; c < idx.size(); ++c)
                    g.col(idx[c]) += masked.col(static_cast<Eigen::Index>(c));
            }
            if (b->requires_grad) b->ensure_grad() += masked.rowwise().sum();
        };
    return out;
}

Value Tape::segment_sum_weighted(Value x, Value w, std::vector<int> offsets) {
    if (w->rows() != 1 || w->cols() != x->cols())
        throw std::invalid_argument("segment_sum_weighted: w must be 1 x cols(x)");
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != x->cols())
        throw std::invalid_argument("segment_sum_weighted: bad offsets");
    const int nseg = static_cast<int>(offsets.size()) - 1;
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(x->rows(), nseg);
    for (int s = 0; s < nseg; ++s)
        for (int c = offsets[static_cast<std::size_t>(s)]; c < offsets[static_cast<std::size_t>(s) + 1]; ++c)
            v.col(s) += w->value(0, c) * x->value.col(c);
    Value out = make(std::move(v), x->requires_grad || w->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, w, out, offsets = std::move(offsets)] {
            const int nseg = static_cast<int>(offsets.size()) - 1;
            Eigen::MatrixXd* xg = x->requires_grad ? &x->ensure_grad() : nullptr;
            Eigen::MatrixXd* wg = w->requires_grad ? &w->ensure_grad() : nullptr;
            for (int s = 0; s < nseg; ++s)
                for (int c = offsets[static_cast<std::size_t>(s)]; c < offsets[static_cast<std::size_t>(s) + 1]; ++c) {
                    if (xg) xg->col(c) += w->value(0, c) * out->grad.col(s);
                    if (wg) (*wg)(0, c) += x->value.col(c).dot(out->grad.col(s));
                }
        };
    return out;
}

Value Tape::scale(Value x, double c) {
    Value out = make(c * x->value, x->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, out, c] { x->ensure_grad() += c * out->grad; };
    return out;
}

Value Tape::concat_rows(const std::vector<Value>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_rows: empty list");
    Eigen::Index rows = 0;
    const Eigen::Index cols = xs.front()->cols();
    bool rg = false;
    for (const Value x : xs) {
        if (x->cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
        rows += x->rows();
        rg = rg || x->requires_grad;
    }
    Eigen::MatrixXd v(rows, cols);
    Eigen::Index at = 0;
    for (const Value x : xs) {
        v.middleRows(at, x->rows()) = x->value;
        at += x->rows();
    }
    Value out = make(std::move(v), rg);
    if (rg) {
        std::vector<Value> parts = xs;
        out->backprop = [parts, out] {
            Eigen::Index at = 0;
            for (const Value x : parts) {
                if (x->requires_grad) x->ensure_grad() += out->grad.middleRows(at, x->rows());
                at += x->rows();
            }
        };
    }
    return out;
}

Value Tape::gather_cols(Value x, std::vector<int> idx) {
    Eigen::MatrixXd v(x->rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
        if (idx[c] < 0 || idx[c] >= x->cols())
            throw std::invalid_argument("gather_cols: index out of range");
        v.col(static_cast<Eigen::Index>(c)) = x->value.col(idx[c]);
    }
    Value out = make(std::move(v), x->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, out, idx = std::move(idx)] {
            auto& g = x->ensure_grad();
            for (std::size_t c = 0; c < idx.size(); ++c)
                g.col(idx[c]) += out->grad.col(static_cast<Eigen::Index>(c));
        };
    return out;
}

Value Tape::max_over_set(const std::vector<Value>& xs) {
    if (xs.empty()) throw std::invalid_argument("max_over_set: empty list");
    const Eigen::Index rows = xs.front()->rows();
    const Eigen::Index cols = xs.front()->cols();
    bool rg = false;
    for (const Value x : xs) {
        if (x->rows() != rows || x->cols() != cols)
            throw std::invalid_argument("max_over_set: shape mismatch");
        rg = rg || x->requires_grad;
    }
    Eigen::MatrixXd v = xs.front()->value;
    Eigen::MatrixXi argmax = Eigen::MatrixXi::Zero(rows, cols);
    for (std::size_t s = 1; s < xs.size(); ++s) {
        const auto& xv = xs[s]->value;
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r)
                if (xv(r, c) > v(r, c)) { // strict >: ties keep the lowest index
                    v(r, c) = xv(r, c);
                    argmax(r, c) = static_cast<int>(s);
                }
    }
    Value out = make(std::move(v), rg);
    if (rg) {
        std::vector<Value> parts = xs;
        out->backprop = [parts, out, argmax = std::move(argmax)] {
            for (std::size_t s = 0; s < parts.size(); ++s) {
                if (!parts[s]->requires_grad) continue;
                auto& g = parts[s]->ensure_grad();
                for (Eigen::Index c = 0; c < out->grad.cols(); ++c)
                    for (Eigen::Index r = 0; r < out->grad.rows(); ++r)
                        if (argmax(r, c) == static_cast<int>(s)) g(r, c) += out->grad(r, c);
            }
        };
    }
    return out;
}

Value Tape::colwise_scale(Value x, Value w) {
    if (w->rows() != 1 || w->cols() != x->cols())
        throw std::invalid_argument("colwise_scale: w must be 1 x cols(x)");
    Eigen::MatrixXd v = x->value.array().rowwise() * w->value.row(0).array();
    Value out = make(std::move(v), x->requires_grad || w->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, w, out] {
            if (x->requires_grad)
                x->ensure_grad().array() += out->grad.array().rowwise() * w->value.row(0).array();
            if (w->requires_grad)
                w->ensure_grad().row(0) +=
                    (out->grad.array() * x->value.array()).colwise().sum().matrix();
        };
    return out;
}

Value Tape::sum_weighted(const std::vector<Value>& ws, const std::vector<Value>& xs) {
    if (ws.size() != xs.size() || xs.empty())
        throw std::invalid_argument("sum_weighted: list size mismatch");
    Value acc = nullptr;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Value w = ws[i];
        Value xi = xs[i];
        Value term;
        if (w->rows() == 1 && w->cols() == 1) {
            term = make(w->value(0, 0) * xi->value, w->requires_grad || xi->requires_grad);
            if (term->requires_grad) {
                Value t = term;
                t->backprop = [xi, w, t] {
                    if (xi->requires_grad) xi->ensure_grad() += w->value(0, 0) * t->grad;
                    if (w->requires_grad)
                        w->ensure_grad()(0, 0) += (t->grad.array() * xi->value.array()).sum();
                };
            }
        } else {
            term = colwise_scale(xi, w);
        }
        acc = acc ? add(acc, term) : term;
    }
    return acc;
}

Value Tape::segment_sum_cols(Value x, std::vector<int> offsets) {
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != x->cols())
        throw std::invalid_argument("segment_sum_cols: bad offsets");
    const int nseg = static_cast<int>(offsets.size()) - 1;
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(x->rows(), nseg);
    for (int s = 0; s < nseg; ++s)
        for (int c = offsets[static_cast<std::size_t>(s)]; c < offsets[static_cast<std::size_t>(s) + 1]; ++c)
            v.col(s) += x->value.col(c);
    Value out = make(std::move(v), x->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, out, offsets = std::move(offsets)] {
            auto& g = x->ensure_grad();
            const int nseg = static_cast<int>(offsets.size()) - 1;
            for (int s = 0; s < nseg; ++s)
                for (int c = offsets[static_cast<std::size_t>(s)]; c < offsets[static_cast<std::size_t>(s) + 1]; ++c)
                    g.col(c) += out->grad.col(s);
        };
    return out;
}

Value Tape::sqnorm_cols(Value x) {
    Eigen::MatrixXd v = x->value.array().square().colwise().sum().matrix();
    Value out = make(std::move(v), x->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, out] {
            x->ensure_grad().array() +=
                2.0 * (x->value.array().rowwise() * out->grad.row(0).array());
        };
    return out;
}

Value Tape::sqrt_elem(Value x) {
    Value out = make(x->value.cwiseSqrt(), x->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, out] {
            // d sqrt(v)/dv = 1/(2 sqrt(v)); guarded at v = 0.
            x->ensure_grad().array() +=
                out->grad.array() / (2.0 * out->value.array()).cwiseMax(1e-300);
        };
    return out;
}

Value Tape::cosine_window(Value d, double r) {
    if (r <= 0.0) throw std::invalid_argument("cosine_window: r must be positive");
    Eigen::MatrixXd v(d->rows(), d->cols());
    for (Eigen::Index c = 0; c < d->cols(); ++c)
        for (Eigen::Index rr = 0; rr < d->rows(); ++rr) {
            const double dist = d->value(rr, c);
            v(rr, c) = dist <= r ? 0.5 * (std::cos(M_PI * dist / r) + 1.0) : 0.0;
        }
    Value out = make(std::move(v), d->requires_grad);
    if (out->requires_grad)
        out->backprop = [d, out, r] {
            auto& g = d->ensure_grad();
            for (Eigen::Index c = 0; c < d->cols(); ++c)
                for (Eigen::Index rr = 0; rr < d->rows(); ++rr) {
                    const double dist = d->value(rr, c);
                    if (dist < r)
                        g(rr, c) += out->grad(rr, c) * (-0.5 * M_PI / r) * std::sin(M_PI * dist / r);
                }
        };
    return out;
}

Value Tape::sum_sq(Value x) {
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = x->value.squaredNorm();
    Value out = make(std::move(v), x->requires_grad);
    if (out->requires_grad)
        out->backprop = [x, out] { x->ensure_grad() += 2.0 * out->grad(0, 0) * x->value; };
    return out;
}

Value Tape::mse(Value pred, Value target) {
    if (pred->rows() != target->rows() || pred->cols() != target->cols())
        throw std::invalid_argument("mse: shape mismatch");
    const double inv_n = 1.0 / static_cast<double>(pred->value.size());
    Eigen::MatrixXd v(1, 1);
    v(0, 0) = (pred->value - target->value).squaredNorm() * inv_n;
    Value out = make(std::move(v), pred->requires_grad || target->requires_grad);
    if (out->requires_grad)
        out->backprop = [pred, target, out, inv_n] {
            const Eigen::MatrixXd diff =
                2.0 * inv_n * out->grad(0, 0) * (pred->value - target->value);
            if (pred->requires_grad) pred->ensure_grad() += diff;
            if (target->requires_grad) target->ensure_grad() -= diff;
        };
    return out;
}

void Tape::backward(Value loss) {
    if (loss->rows() != 1 || loss->cols() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    loss->ensure_grad()(0, 0) += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node* n = it->get();
        if (!n->requires_grad || n->grad.size() == 0) continue;
        if (n->backprop) n->backprop();
        if (n->param) n->param->grad += n->grad;
    }
    // Interior and parameter-bound node grads are cleared so a repeated
    // backward adds fresh contributions; pure input leaves keep theirs so
    // callers can read d(loss)/d(input).
    for (auto& n : nodes_)
        if ((n->backprop || n->param) && n->grad.size() != 0) n->grad.setZero();
}

Eigen::MatrixXd glorot_uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in,
                               Eigen::Index fan_out, std::uint64_t seed) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    CounterRng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-limit, limit);
    return m;
}

} // namespace gfrs::ad
