#include "gfrs/graph.hpp"

#include "gfrs/kdtree.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace gfrs {

KnnGraph build_knn_graph(const PointCloud& cloud, int k, std::optional<double> sigma) {
    const int n = static_cast<int>(cloud.size());
    if (k < 1 || k >= n) throw std::invalid_argument("build_knn_graph: need 1 <= k < N");
    if (sigma && *sigma <= 0.0) throw std::invalid_argument("build_knn_graph: sigma must be positive");

    const KdTree index(cloud);
    std::set<std::pair<int, int>> pairs;
    double kth_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        // k+1 including the point itself; drop the self entry.
        const auto nbrs = index.knn(cloud.points[static_cast<std::size_t>(i)], k + 1);
        int used = 0;
        double kth = 0.0;
        for (const auto& nb : nbrs) {
            if (nb.index == i) continue;
            if (used == k) break;
            pairs.insert({std::min(i, nb.index), std::max(i, nb.index)});
            kth = nb.distance;
            ++used;
        }
        kth_sum += kth;
    }
    const double sig = sigma ? *sigma : kth_sum / n;
    if (sig <= 0.0) throw std::invalid_argument("build_knn_graph: degenerate cloud, sigma is zero");

    KnnGraph g;
    g.n = n;
    g.k = k;
    g.sigma = sig;
    g.edges.reserve(pairs.size());
    for (const auto& [i, j] : pairs) {
        const double d2 =
            (cloud.points[static_cast<std::size_t>(i)] - cloud.points[static_cast<std::size_t>(j)])
                .squaredNorm();
        g.edges.push_back(GraphEdge{i, j, std::exp(-d2 / (sig * sig))});
    }
    return g;
}

Laplacian laplacian(const KnnGraph& graph) {
    Laplacian L;
    L.n = graph.n;
    L.edges = graph.edges;
    L.degree.assign(static_cast<std::size_t>(graph.n), 0.0);
    for (const auto& e : graph.edges) {
        L.degree[static_cast<std::size_t>(e.i)] += e.w;
        L.degree[static_cast<std::size_t>(e.j)] += e.w;
    }
    return L;
}

Eigen::MatrixXd Laplacian::apply(const Eigen::MatrixXd& x) const {
    if (x.rows() != n) throw std::invalid_argument("Laplacian::apply: dimension mismatch");
    Eigen::MatrixXd y(x.rows(), x.cols());
    for (int i = 0; i < n; ++i) y.row(i) = degree[static_cast<std::size_t>(i)] * x.row(i);
    for (const auto& e : edges) {
        y.row(e.i) -= e.w * x.row(e.j);
        y.row(e.j) -= e.w * x.row(e.i);
    }
    return y;
}

Eigen::MatrixXd Laplacian::dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = degree[static_cast<std::size_t>(i)];
    for (const auto& e : edges) {
        m(e.i, e.j) -= e.w;
        m(e.j, e.i) -= e.w;
    }
    return m;
}

double glr_value(const Laplacian& L, const Eigen::MatrixXd& z) {
    if (z.rows() != L.n) throw std::invalid_argument("glr_value: dimension mismatch");
    double v = 0.0;
    for (const auto& e : L.edges) v += e.w * (z.row(e.i) - z.row(e.j)).squaredNorm();
    return v;
}

Eigen::MatrixXd solve_regularized(const Laplacian& L, const Eigen::MatrixXd& x, double lambda,
                                  double tol) {
    if (x.rows() != L.n) throw std::invalid_argument("solve_regularized: dimension mismatch");
    if (lambda < 0.0) throw std::invalid_argument("solve_regularized: lambda must be >= 0");
    if (lambda == 0.0) return x;

    // CG on the SPD system (I + lambda L) Z = X, all columns at once.
    auto apply_a = [&](const Eigen::MatrixXd& z) -> Eigen::MatrixXd {
        return z + lambda * L.apply(z);
    };

    Eigen::MatrixXd z = x; // warm start at X
    Eigen::MatrixXd r = x - apply_a(z);
    Eigen::MatrixXd p = r;
    double rs = r.squaredNorm();

    const int max_iters = 20 * L.n + 100;
    for (int it = 0; it < max_iters; ++it) {
        const double rinf = r.cwiseAbs().maxCoeff();
        if (rinf < tol) return z;
        const Eigen::MatrixXd q = apply_a(p);
        const double denom = (p.array() * q.array()).sum();
        if (denom <= 0.0) break;
        const double alpha = rs / denom;
        z += alpha * p;
        r -= alpha * q;
        const double rs_new = r.squaredNorm();
        p = r + (rs_new / rs) * p;
        rs = rs_new;
    }
    const double rinf = (x - apply_a(z)).cwiseAbs().maxCoeff();
    if (rinf < tol) return z;
    throw NumericalError("solve_regularized: conjugate gradient did not converge", rinf);
}

} // namespace gfrs
