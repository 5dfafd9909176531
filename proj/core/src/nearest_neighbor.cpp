#include "diffcd/nearest_neighbor.hpp"

#include "diffcd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace diffcd {

namespace {

constexpr Eigen::Index kLeafSize = 16;

struct Candidate {
    double dist2;
    Eigen::Index index;
    bool operator<(const Candidate& o) const {
        return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
    }
};

}  // namespace

NearestNeighborIndex::NearestNeighborIndex(Points points) : points_(std::move(points)) {
    if (points_.cols() == 0) throw InputError("nearest-neighbor index over an empty point set");
    order_.resize(static_cast<std::size_t>(points_.cols()));
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    nodes_.reserve(static_cast<std::size_t>(2 * points_.cols() / kLeafSize + 2));
    build(0, points_.cols());
}

std::int32_t NearestNeighborIndex::build(Eigen::Index begin, Eigen::Index end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    // Split along the axis of largest spread at the median.
    Vector lo = Vector::Constant(dim(), std::numeric_limits<double>::infinity());
    Vector hi = -lo;
    for (Eigen::Index i = begin; i < end; ++i) {
        const auto p = points_.col(order_[static_cast<std::size_t>(i)]);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all points identical: keep as leaf

    const Eigen::Index mid = begin + (end - begin) / 2;
    auto first = order_.begin() + begin;
    std::nth_element(first, order_.begin() + mid, order_.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) {
                         return points_(axis, a) < points_(axis, b);
                     });
    const double split = points_(axis, order_[static_cast<std::size_t>(mid)]);

    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
}

std::vector<Neighbor> NearestNeighborIndex::k_nearest(const Eigen::Ref<const Vector>& query,
                                                      std::size_t k) const {
    if (query.size() != dim()) throw InputError("nearest-neighbor query: dimension mismatch");
    k = std::min<std::size_t>(k, static_cast<std::size_t>(size()));
    if (k == 0) return {};

    std::priority_queue<Candidate> heap;  // max-heap: worst candidate on top
    auto worst = [&] {
        return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().dist2;
    };

    // Iterative depth-first search, nearer child first.
    struct Item {
        std::int32_t node;
        double bound;  // squared distance lower bound to the node's half-space
    };
    std::vector<Item> stack{{0, 0.0}};
    while (!stack.empty()) {
        const Item item = stack.back();
        stack.pop_back();
        if (item.bound > worst()) continue;
        const Node& node = nodes_[static_cast<std::size_t>(item.node)];
        if (node.axis < 0) {
            for (Eigen::Index i = node.begin; i < node.end; ++i) {
                const Eigen::Index idx = order_[static_cast<std::size_t>(i)];
                const Candidate c{(points_.col(idx) - query).squaredNorm(), idx};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            continue;
        }
        const double diff = query[node.axis] - node.split;
        const std::int32_t near = diff < 0.0 ? node.left : node.right;
        const std::int32_t far = diff < 0.0 ? node.right : node.left;
        stack.push_back({far, std::max(item.bound, diff * diff)});
        stack.push_back({near, item.bound});
    }

    std::vector<Neighbor> out(heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = {heap.top().index, std::sqrt(heap.top().dist2)};
        heap.pop();
    }
    return out;
}

Neighbor NearestNeighborIndex::nearest(const Eigen::Ref<const Vector>& query) const {
    return k_nearest(query, 1).front();
}

std::vector<Neighbor> NearestNeighborIndex::nearest_all(const Points& queries) const {
    require_dim(queries, dim(), "nearest-neighbor query");
    std::vector<Neighbor> out(static_cast<std::size_t>(queries.cols()));
    constexpr std::size_t kBlock = 1024;
    parallel::for_blocks(parallel::block_count(out.size(), kBlock), [&](std::size_t b) {
        const std::size_t end = std::min(out.size(), (b + 1) * kBlock);
        for (std::size_t j = b * kBlock; j < end; ++j) {
            out[j] = nearest(queries.col(static_cast<Eigen::Index>(j)));
        }
    });
    return out;
}

}  // namespace diffcd
