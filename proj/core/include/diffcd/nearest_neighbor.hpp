#pragma once

#include "diffcd/types.hpp"

#include <cstdint>
#include <vector>

namespace diffcd {

struct Neighbor {
    Eigen::Index index = -1;
    double distance = 0.0;
};

/// Exact nearest-neighbor queries over a fixed 2D/3D point set (kd-tree).
/// Ties are broken by the lowest point index, so results match a brute-force
/// argmin scanned in index order.
class NearestNeighborIndex {
public:
    NearestNeighborIndex() = default;
    explicit NearestNeighborIndex(Points points);

    const Points& points() const { return points_; }
    Eigen::Index size() const { return points_.cols(); }
    int dim() const { return static_cast<int>(points_.rows()); }

    Neighbor nearest(const Eigen::Ref<const Vector>& query) const;
    /// The k closest points sorted by (distance, index). k is clamped to size().
    std::vector<Neighbor> k_nearest(const Eigen::Ref<const Vector>& query, std::size_t k) const;

    /// Batched nearest(): one result per column of `queries`.
    std::vector<Neighbor> nearest_all(const Points& queries) const;

private:
    struct Node {
        Eigen::Index begin = 0;  // range into order_
        Eigen::Index end = 0;
        int axis = -1;           // -1 for leaves
        double split = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
    };

    std::int32_t build(Eigen::Index begin, Eigen::Index end);

    Points points_;
    std::vector<Eigen::Index> order_;
    std::vector<Node> nodes_;
};

}  // namespace diffcd
