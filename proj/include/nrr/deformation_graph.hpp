#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

#include "nrr/common.hpp"
#include "nrr/geodesic.hpp"
#include "nrr/surface.hpp"

namespace nrr {

/// One affine transform per graph node, stacked as a 4N x 3 matrix in which
/// node j occupies rows 4j..4j+3 as [A_j^T; t_j^T].
struct NodeTransforms {
    Eigen::MatrixXd stacked;

    static NodeTransforms identity(int node_count) {
        NodeTransforms x;
        x.stacked.setZero(4 * node_count, 3);
        for (int j = 0; j < node_count; ++j)
            x.stacked.block<3, 3>(4 * j, 0).setIdentity();
        return x;
    }

    int node_count() const { return static_cast<int>(stacked.rows()) / 4; }
    Mat3 affine(int j) const { return stacked.block<3, 3>(4 * j, 0).transpose(); }
    Vec3 translation(int j) const { return stacked.row(4 * j + 3).transpose(); }

    void set(int j, const Mat3& a, const Vec3& t) {
        stacked.block<3, 3>(4 * j, 0) = a.transpose();
        stacked.row(4 * j + 3) = t.transpose();
    }

    bool all_finite() const { return stacked.allFinite(); }
};

struct InfluenceEntry {
    int node = -1;      // graph node id
    double weight = 0;  // normalized blend weight
    double distance = 0;  // geodesic distance cached from construction
};

/// Sparse node graph steering the deformation: nodes are a subset of the
/// source points, each source point blends the transforms of the nodes within
/// geodesic radius R, and node pairs that share an influenced point are
/// connected for regularization.
struct DeformationGraph {
    std::vector<int> node_indices;    // source point index per node
    std::vector<Vec3> node_positions;
    std::vector<std::pair<int, int>> graph_edges;  // node-id pairs, first < second
    std::vector<std::vector<InfluenceEntry>> influence;  // per source point
    std::vector<std::vector<int>> node_neighbors;        // per node, ascending

    // directed neighbor pairs (i, j) with j in N(i), i-major order, and the
    // normalized inverse-distance weight of each pair (mean over pairs is 1)
    std::vector<std::pair<int, int>> reg_pairs;
    std::vector<double> reg_weights;

    double radius = 0.0;

    int node_count() const { return static_cast<int>(node_indices.size()); }
    int directed_pair_count() const { return static_cast<int>(reg_pairs.size()); }
    int edge_count() const { return static_cast<int>(graph_edges.size()); }
};

/// Indices sorted by projection onto the dominant principal axis of the
/// points (ascending). The axis sign is fixed so its first nonzero component
/// is positive; projection ties resolve by index, so identical points keep
/// their original order.
inline std::vector<int> pca_order(const std::vector<Vec3>& points) {
    const int n = static_cast<int>(points.size());
    if (n == 0) throw ConfigError("pca_order: empty point set");

    Vec3 mean = Vec3::Zero();
    for (const auto& p : points) mean += p;
    mean /= static_cast<double>(n);

    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - mean;
        cov += d * d.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Vec3 axis = eig.eigenvectors().col(2);  // eigenvalues ascend in Eigen
    if (!axis.allFinite()) axis = Vec3::UnitX();
    for (int c = 0; c < 3; ++c) {
        if (axis[c] != 0.0) {
            if (axis[c] < 0.0) axis = -axis;
            break;
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> proj(n);
    for (int i = 0; i < n; ++i) proj[i] = points[i].dot(axis);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (proj[a] != proj[b]) return proj[a] < proj[b];
        return a < b;
    });
    return order;
}

/// Normalized blend weights for one influence set from its geodesic
/// distances: (1 - D^2/R^2)^3, rescaled to sum to 1. All distances must be
/// strictly below R.
inline std::vector<double> influence_weights(const std::vector<double>& distances,
                                             double radius) {
    if (distances.empty()) throw ConfigError("influence_weights: empty influence set");
    std::vector<double> w(distances.size());
    double total = 0.0;
    for (size_t k = 0; k < distances.size(); ++k) {
        const double ratio = 1.0 - (distances[k] * distances[k]) / (radius * radius);
        if (!(ratio > 0.0))
            throw NumericalError("influence_weights: distance not below radius");
        w[k] = ratio * ratio * ratio;
        total += w[k];
    }
    for (auto& v : w) v /= total;
    return w;
}

/// Fills reg_pairs/reg_weights of the graph: for every directed neighbor pair
/// the weight is proportional to the inverse node distance, normalized so the
/// mean over all 2|E| directed pairs is exactly 1.
inline void reg_weight_table(DeformationGraph& graph) {
    graph.reg_pairs.clear();
    graph.reg_weights.clear();
    if (graph.graph_edges.empty()) return;

    double inv_sum = 0.0;
    for (int i = 0; i < graph.node_count(); ++i) {
        for (int j : graph.node_neighbors[i]) {
            const double len = (graph.node_positions[i] - graph.node_positions[j]).norm();
            if (!(len > 0.0))
                throw NumericalError("reg_weight_table: coincident node positions");
            graph.reg_pairs.emplace_back(i, j);
            graph.reg_weights.push_back(1.0 / len);
            inv_sum += 1.0 / len;
        }
    }
    const double scale = static_cast<double>(graph.reg_pairs.size()) / inv_sum;
    for (auto& c : graph.reg_weights) c *= scale;
}

/// Builds the deformation graph for a source surface with sampling radius R.
///
/// Points are visited in PCA order; a point becomes a node when no node built
/// so far influences it, and a new node immediately influences every point
/// within geodesic radius R (itself included, at distance 0). Nodes that
/// share an influenced point are connected. Influence distances are cached
/// here and reused unchanged during optimization.
inline DeformationGraph build_graph(const Surface& source, double radius) {
    const int n = source.point_count();
    if (n == 0) throw ConfigError("build_graph: empty source surface");
    if (!(radius > 0.0)) throw ConfigError("build_graph: radius must be positive");

    DeformationGraph graph;
    graph.radius = radius;

    std::vector<std::vector<std::pair<int, double>>> raw(n);  // (node id, distance)
    const std::vector<int> order = pca_order(source.points);
    for (int idx : order) {
        if (!graph.node_indices.empty() && !raw[idx].empty()) continue;
        const int node_id = graph.node_count();
        graph.node_indices.push_back(idx);
        graph.node_positions.push_back(source.points[idx]);
        for (const auto& [q, dist] : limited_geodesic(source, idx, radius))
            raw[q].emplace_back(node_id, dist);
    }

    // connect nodes that influence a common point
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
        const auto& list = raw[i];  // node ids ascend by construction
        for (size_t a = 0; a < list.size(); ++a)
            for (size_t b = a + 1; b < list.size(); ++b)
                edges.emplace_back(list[a].first, list[b].first);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    graph.graph_edges = std::move(edges);

    graph.node_neighbors.assign(graph.node_count(), {});
    for (const auto& [a, b] : graph.graph_edges) {
        graph.node_neighbors[a].push_back(b);
        graph.node_neighbors[b].push_back(a);
    }
    for (auto& nb : graph.node_neighbors) std::sort(nb.begin(), nb.end());

    graph.influence.assign(n, {});
    std::vector<double> dists;
    for (int i = 0; i < n; ++i) {
        if (raw[i].empty())
            throw NumericalError("build_graph: point left without influencing nodes");
        dists.clear();
        for (const auto& [node, d] : raw[i]) dists.push_back(d);
        const std::vector<double> w = influence_weights(dists, radius);
        graph.influence[i].resize(raw[i].size());
        for (size_t k = 0; k < raw[i].size(); ++k)
            graph.influence[i][k] = {raw[i][k].first, w[k], raw[i][k].second};
    }

    reg_weight_table(graph);
    return graph;
}

/// Deformed position of one source point under the node transforms:
/// the weighted blend of A_j (v - p_j) + p_j + t_j over its influence set.
inline Vec3 deformed_position(const Vec3& v, const std::vector<InfluenceEntry>& inf,
                              const DeformationGraph& graph, const NodeTransforms& x) {
    Vec3 out = Vec3::Zero();
    for (const auto& e : inf) {
        const Vec3& p = graph.node_positions[e.node];
        out += e.weight * (x.affine(e.node) * (v - p) + p + x.translation(e.node));
    }
    return out;
}

/// Deforms every source point; node transforms are unpacked once.
inline std::vector<Vec3> deform_points(const Surface& source, const DeformationGraph& graph,
                                       const NodeTransforms& x) {
    const int m = graph.node_count();
    std::vector<Mat3> rot(m);
    std::vector<Vec3> shift(m);  // p_j + t_j
    for (int j = 0; j < m; ++j) {
        rot[j] = x.affine(j);
        shift[j] = graph.node_positions[j] + x.translation(j);
    }
    std::vector<Vec3> out(source.points.size());
    for (size_t i = 0; i < source.points.size(); ++i) {
        Vec3 acc = Vec3::Zero();
        for (const auto& e : graph.influence[i]) {
            acc += e.weight *
                   (rot[e.node] * (source.points[i] - graph.node_positions[e.node]) +
                    shift[e.node]);
        }
        out[i] = acc;
    }
    return out;
}

}  // namespace nrr
