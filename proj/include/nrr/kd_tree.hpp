#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "nrr/common.hpp"

namespace nrr {

/// Spatial accelerator for exact nearest-neighbor queries over a fixed point
/// set. Results are identical to an exhaustive scan, including the tie rule:
/// equal distances resolve to the smallest point index. Safe for concurrent
/// read-only queries once built.
class SpatialIndex {
public:
    struct Hit {
        int index = -1;
        double distance = 0.0;
    };

    explicit SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty())
            throw NumericalError("SpatialIndex: cannot index an empty point set");
        order_.resize(points_.size());
        for (size_t i = 0; i < points_.size(); ++i) order_[i] = static_cast<int>(i);
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        root_ = build(0, static_cast<int>(points_.size()));
    }

    Hit nearest(const Vec3& q) const {
        int best_index = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        search(root_, q, best_index, best_d2);
        return {best_index, std::sqrt(best_d2)};
    }

    const std::vector<Vec3>& points() const { return points_; }
    int size() const { return static_cast<int>(points_.size()); }

private:
    static constexpr int kLeafSize = 8;

    struct Node {
        int axis = -1;       // -1 marks a leaf
        double split = 0.0;  // left subtree coords <= split, right >= split
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into order_
    };

    int build(int begin, int end) {
        Node node;
        if (end - begin <= kLeafSize) {
            node.begin = begin;
            node.end = end;
            nodes_.push_back(node);
            return static_cast<int>(nodes_.size()) - 1;
        }
        Vec3 lo = points_[order_[begin]], hi = lo;
        for (int i = begin + 1; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        const int mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
        node.axis = axis;
        node.split = points_[order_[mid]][axis];
        nodes_.push_back(node);
        const int self = static_cast<int>(nodes_.size()) - 1;
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
    }

    void search(int node_id, const Vec3& q, int& best_index, double& best_d2) const {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int idx = order_[i];
                const double d2 = (points_[idx] - q).squaredNorm();
                if (d2 < best_d2 || (d2 == best_d2 && idx < best_index)) {
                    best_d2 = d2;
                    best_index = idx;
                }
            }
            return;
        }
        const double diff = q[node.axis] - node.split;
        const int near = diff < 0.0 ? node.left : node.right;
        const int far = diff < 0.0 ? node.right : node.left;
        search(near, q, best_index, best_d2);
        // non-strict: an equal-distance, smaller-index point may sit across the plane
        if (diff * diff <= best_d2) search(far, q, best_index, best_d2);
    }

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

inline SpatialIndex build_spatial_index(std::vector<Vec3> points) {
    return SpatialIndex(std::move(points));
}

/// Index and Euclidean distance of the indexed point nearest to q.
inline std::pair<int, double> closest_point(const SpatialIndex& index, const Vec3& q) {
    const auto hit = index.nearest(q);
    return {hit.index, hit.distance};
}

}  // namespace nrr
