#include "gfrs/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace gfrs {

namespace {
constexpr int kLeafSize = 16;

// Heap entry ordering: the "worst" candidate is the one with the larger
// (distance^2, index) pair, so ties resolve toward smaller indices.
struct Candidate {
    double d2;
    int index;
    bool operator<(const Candidate& o) const {
        return d2 < o.d2 || (d2 == o.d2 && index < o.index);
    }
};
} // namespace

KdTree::KdTree(const PointCloud& cloud) : pts_(cloud.points) {
    if (pts_.empty()) throw std::invalid_argument("KdTree: empty cloud");
    order_.resize(pts_.size());
    for (std::size_t i = 0; i < pts_.size(); ++i) order_[i] = static_cast<int>(i);
    nodes_.reserve(2 * pts_.size() / kLeafSize + 4);
    root_ = build(0, static_cast<int>(pts_.size()), 0);
}

int KdTree::build(int begin, int end, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= kLeafSize) {
        nodes_[static_cast<std::size_t>(id)].begin = begin;
        nodes_[static_cast<std::size_t>(id)].end = end;
        return id;
    }
    // Split along the axis of largest extent.
    Eigen::Vector3d lo = pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(begin)])];
    Eigen::Vector3d hi = lo;
    for (int i = begin; i < end; ++i) {
        const auto& p = pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    int axis;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) {
        // All points coincide on every axis; keep as a leaf.
        nodes_[static_cast<std::size_t>(id)].begin = begin;
        nodes_[static_cast<std::size_t>(id)].end = end;
        return id;
    }
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double pa = pts_[static_cast<std::size_t>(a)][axis];
                         const double pb = pts_[static_cast<std::size_t>(b)][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const double split = pts_[static_cast<std::size_t>(order_[static_cast<std::size_t>(mid)])][axis];
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    Node& n = nodes_[static_cast<std::size_t>(id)];
    n.axis = axis;
    n.split = split;
    n.left = left;
    n.right = right;
    return id;
}

std::vector<Neighbor> KdTree::knn(const Eigen::Vector3d& query, int k) const {
    if (k < 1 || static_cast<std::size_t>(k) > pts_.size())
        throw std::invalid_argument("knn: k out of range");

    std::priority_queue<Candidate> heap;
    auto consider = [&](int idx) {
        const double d2 = (pts_[static_cast<std::size_t>(idx)] - query).squaredNorm();
        const Candidate c{d2, idx};
        if (static_cast<int>(heap.size()) < k) {
            heap.push(c);
        } else if (c < heap.top()) {
            heap.pop();
            heap.push(c);
        }
    };

    // Depth-first with near-side preference; prune subtrees whose slab
    // distance exceeds the current worst kept candidate.
    std::vector<int> stack;
    stack.push_back(root_);
    std::vector<double> slack; // squared distance lower bound to the node
    slack.push_back(0.0);
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const double bound = slack.back();
        slack.pop_back();
        if (static_cast<int>(heap.size()) == k && bound > heap.top().d2) continue;
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.axis < 0) {
            for (int i = n.begin; i < n.end; ++i) consider(order_[static_cast<std::size_t>(i)]);
            continue;
        }
        const double diff = query[n.axis] - n.split;
        const int near = diff < 0.0 ? n.left : n.right;
        const int far = diff < 0.0 ? n.right : n.left;
        const double far_bound = std::max(bound, diff * diff);
        stack.push_back(far);
        slack.push_back(far_bound);
        stack.push_back(near);
        slack.push_back(bound);
    }

    std::vector<Neighbor> out(static_cast<std::size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
        const Candidate c = heap.top();
        heap.pop();
        out[static_cast<std::size_t>(i)] = Neighbor{c.index, std::sqrt(c.d2)};
    }
    return out;
}

std::vector<Neighbor> KdTree::radius_neighbors(const Eigen::Vector3d& query, double r, int cap) const {
    if (r <= 0.0) throw std::invalid_argument("radius_neighbors: r must be positive");
    if (cap < 1) throw std::invalid_argument("radius_neighbors: cap must be >= 1");
    const double r2 = r * r;

    std::vector<Candidate> hits;
    std::vector<int> stack;
    std::vector<double> slack;
    stack.push_back(root_);
    slack.push_back(0.0);
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const double bound = slack.back();
        slack.pop_back();
        if (bound > r2) continue;
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.axis < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const int idx = order_[static_cast<std::size_t>(i)];
                const double d2 = (pts_[static_cast<std::size_t>(idx)] - query).squaredNorm();
                if (d2 <= r2) hits.push_back(Candidate{d2, idx});
            }
            continue;
        }
        const double diff = query[n.axis] - n.split;
        const int near = diff < 0.0 ? n.left : n.right;
        const int far = diff < 0.0 ? n.right : n.left;
        stack.push_back(far);
        slack.push_back(std::max(bound, diff * diff));
        stack.push_back(near);
        slack.push_back(bound);
    }
    std::sort(hits.begin(), hits.end());
    if (static_cast<int>(hits.size()) > cap) hits.resize(static_cast<std::size_t>(cap));
    std::vector<Neighbor> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(Neighbor{h.index, std::sqrt(h.d2)});
    return out;
}

Neighbor KdTree::nearest(const Eigen::Vector3d& query) const {
    return knn(query, 1).front();
}

} // namespace gfrs
