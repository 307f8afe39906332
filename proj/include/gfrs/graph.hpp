#ifndef GFRS_GRAPH_HPP
#define GFRS_GRAPH_HPP

#include "gfrs/point_cloud.hpp"

#include <optional>
#include <vector>

namespace gfrs {

struct GraphEdge {
    int i, j;   // i < j, each unordered pair stored once
    double w;   // exp(-dist^2 / sigma^2), in (0, 1]
};

struct KnnGraph {
    int n = 0;
    int k = 0;
    double sigma = 0.0;
    std::vector<GraphEdge> edges;
};

/// Combinatorial Laplacian L = D - W in triplet form. Symmetric and PSD;
/// rows sum to zero.
struct Laplacian {
    int n = 0;
    std::vector<GraphEdge> edges; // off-diagonal structure (weights of W)
    std::vector<double> degree;   // diagonal of D

    /// Y = L * X for an n x c signal.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd dense() const;
};

/// kNN graph with Gaussian edge weights; the edge set is the symmetrized
/// union of directed kNN links. If sigma is unset it defaults to the mean
/// distance from each point to its k-th neighbor.
KnnGraph build_knn_graph(const PointCloud& cloud, int k,
                         std::optional<double> sigma = std::nullopt);

Laplacian laplacian(const KnnGraph& graph);

/// trace(Z^T L Z) = sum over edges of w_ij * ||z_i - z_j||^2.
double glr_value(const Laplacian& L, const Eigen::MatrixXd& z);

/// Solves (I + lambda L) Z = X by conjugate gradients to an infinity-norm
/// residual below `tol`; lambda = 0 returns X exactly. Throws
/// gfrs::NumericalError if the iteration budget is exhausted.
Eigen::MatrixXd solve_regularized(const Laplacian& L, const Eigen::MatrixXd& x, double lambda,
                                  double tol = 1e-10);

struct NumericalError : std::runtime_error {
    double residual;
    explicit NumericalError(const std::string& what, double res)
        : std::runtime_error(what), residual(res) {}
};

} // namespace gfrs

#endif
