#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "nrr/common.hpp"

namespace nrr {

/// A surface sample set: points, optional triangle faces, and neighbor
/// edges (from faces, or from k-nearest-neighbor connectivity for raw
/// point clouds). Edges are stored unique with first < second.
struct Surface {
    std::vector<Vec3> points;
    std::vector<std::array<int, 3>> faces;
    std::vector<std::pair<int, int>> edges;
    double avg_edge_length = 0.0;

    // per-vertex (neighbor, edge length) lists, derived from `edges`
    std::vector<std::vector<std::pair<int, double>>> adjacency;

    int point_count() const { return static_cast<int>(points.size()); }

    /// Rebuilds adjacency and the mean edge length from `edges`.
    void finalize_edges() {
        const int n = point_count();
        adjacency.assign(n, {});
        double total = 0.0;
        for (const auto& [a, b] : edges) {
            if (a < 0 || b < 0 || a >= n || b >= n)
                throw NumericalError("surface edge index out of range");
            if (a == b) throw NumericalError("surface edge is a self-loop");
            const double len = (points[a] - points[b]).norm();
            adjacency[a].emplace_back(b, len);
            adjacency[b].emplace_back(a, len);
            total += len;
        }
        for (auto& nb : adjacency)
            std::sort(nb.begin(), nb.end());
        avg_edge_length = edges.empty() ? 0.0 : total / static_cast<double>(edges.size());
    }
};

/// Unique undirected edges (a < b) of a triangle list.
inline std::vector<std::pair<int, int>> edges_from_faces(
    const std::vector<std::array<int, 3>>& faces, int point_count) {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(faces.size() * 3);
    for (const auto& f : faces) {
        for (int c = 0; c < 3; ++c) {
            int a = f[c], b = f[(c + 1) % 3];
            if (a < 0 || b < 0 || a >= point_count || b >= point_count)
                throw NumericalError("face index out of range");
            if (a == b) throw NumericalError("degenerate face with repeated vertex");
            edges.emplace_back(std::min(a, b), std::max(a, b));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

/// Symmetric k-nearest-neighbor connectivity: edge (i,j) is present if j is
/// among i's k nearest points or vice versa. Distance ties break toward the
/// smaller index.
inline std::vector<std::pair<int, int>> knn_edges(const std::vector<Vec3>& points, int k) {
    const int n = static_cast<int>(points.size());
    if (k < 1) throw ConfigError("knn_edges: k must be >= 1");
    if (k >= n) throw ConfigError("knn_edges: k must be smaller than the point count");

    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<size_t>(n) * k);
    std::vector<std::pair<double, int>> dist(n - 1);
    for (int i = 0; i < n; ++i) {
        dist.clear();
        for (int j = 0; j < n; ++j)
            if (j != i) dist.emplace_back((points[i] - points[j]).squaredNorm(), j);
        std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
        // nth_element leaves ties across the boundary unordered; re-sort the
        // prefix so the kept set is the lexicographic (distance, index) minimum
        std::sort(dist.begin(), dist.end());
        for (int t = 0; t < k; ++t) {
            int j = dist[t].second;
            edges.emplace_back(std::min(i, j), std::max(i, j));
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

/// Builds a surface from points and (possibly empty) faces. Point clouds get
/// kNN connectivity with the given neighbor count.
inline Surface make_surface(std::vector<Vec3> points,
                            std::vector<std::array<int, 3>> faces = {},
                            int knn_k = 6) {
    Surface s;
    s.points = std::move(points);
    s.faces = std::move(faces);
    if (!s.faces.empty())
        s.edges = edges_from_faces(s.faces, s.point_count());
    else if (s.point_count() > 1)
        s.edges = knn_edges(s.points, std::min(knn_k, s.point_count() - 1));
    s.finalize_edges();
    return s;
}

/// Similarity transform shared by a source/target pair: v_norm = (v - center) * scale.
struct Normalization {
    double scale = 1.0;
    Vec3 center = Vec3::Zero();

    Vec3 apply(const Vec3& v) const { return (v - center) * scale; }
    Vec3 invert(const Vec3& v) const { return v / scale + center; }
};

/// Rescales both surfaces in place with one shared similarity transform so
/// that their joint axis-aligned bounding box has a unit-length diagonal.
/// Returns the transform so results and metrics can be mapped back to the
/// original units.
inline Normalization normalize_pair(Surface& source, Surface& target) {
    if (source.points.empty() || target.points.empty())
        throw NumericalError("normalize_pair: empty surface");
    Vec3 lo = source.points[0], hi = source.points[0];
    auto extend = [&](const std::vector<Vec3>& pts) {
        for (const auto& p : pts) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    };
    extend(source.points);
    extend(target.points);
    const double diag = (hi - lo).norm();
    if (!(diag > 0.0))
        throw NumericalError("normalize_pair: degenerate joint bounding box");

    Normalization norm;
    norm.scale = 1.0 / diag;
    norm.center = 0.5 * (lo + hi);
    for (auto& p : source.points) p = norm.apply(p);
    for (auto& p : target.points) p = norm.apply(p);
    source.finalize_edges();
    target.finalize_edges();
    return norm;
}

}  // namespace nrr
