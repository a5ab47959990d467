#pragma once

#include <queue>
#include <utility>
#include <vector>

#include "nrr/common.hpp"
#include "nrr/surface.hpp"

namespace nrr {

/// Edge-graph geodesic distances from one source vertex, limited to the ball
/// of radius R. Returns every vertex whose shortest-path distance along the
/// surface edges is < R, as (vertex, distance) pairs sorted by vertex index;
/// the source itself is always present at distance 0.
///
/// The search first collects, by breadth-first traversal, the connected
/// neighborhood of vertices whose Euclidean distance to the source is < R.
/// Since the Euclidean distance never exceeds the path distance, every vertex
/// within geodesic radius R lies in that neighborhood, and running Dijkstra on
/// the induced subgraph reproduces the full-graph distances below R exactly.
inline std::vector<std::pair<int, double>> limited_geodesic(const Surface& surface,
                                                            int source_index,
                                                            double radius) {
    const int n = surface.point_count();
    if (source_index < 0 || source_index >= n)
        throw ConfigError("limited_geodesic: source index out of range");
    if (!(radius > 0.0)) throw ConfigError("limited_geodesic: radius must be positive");
    if (surface.adjacency.empty() && n > 0)
        throw NumericalError("limited_geodesic: surface adjacency not built");

    const Vec3 src = surface.points[source_index];

    // Euclidean-ball neighborhood, reachable through in-ball vertices only.
    std::vector<char> in_ball(n, 0);
    std::vector<int> ball;
    std::queue<int> frontier;
    in_ball[source_index] = 1;
    ball.push_back(source_index);
    frontier.push(source_index);
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        for (const auto& [w, len] : surface.adjacency[v]) {
            if (in_ball[w]) continue;
            if ((surface.points[w] - src).norm() < radius) {
                in_ball[w] = 1;
                ball.push_back(w);
                frontier.push(w);
            }
        }
    }

    // Dijkstra restricted to the ball; ties pop by vertex index for determinism.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, kInf);
    std::vector<char> done(n, 0);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    dist[source_index] = 0.0;
    heap.emplace(0.0, source_index);
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (done[v] || d > dist[v]) continue;
        done[v] = 1;
        if (d >= radius) continue;  // no shorter-than-R path can extend it
        for (const auto& [w, len] : surface.adjacency[v]) {
            if (!in_ball[w] || done[w]) continue;
            const double cand = d + len;
            if (cand < dist[w]) {
                dist[w] = cand;
                heap.emplace(cand, w);
            }
        }
    }

    std::vector<std::pair<int, double>> result;
    result.reserve(ball.size());
    std::sort(ball.begin(), ball.end());
    for (int v : ball)
        if (dist[v] < radius) result.emplace_back(v, dist[v]);
    return result;
}

}  // namespace nrr
