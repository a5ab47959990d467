#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here recomputes expected values from first principles (exhaustive scans,
// full-graph Dijkstra, scalar loops over the energy definitions) so the
// library implementation is checked against an independent path.

#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "nrr/nrr.hpp"

namespace test_helpers {

using nrr::Mat3;
using nrr::Vec3;

// ---------------------------------------------------------------- geometry

inline std::pair<int, double> brute_force_nearest(const std::vector<Vec3>& points,
                                                  const Vec3& q) {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < points.size(); ++i) {
        const double d2 = (points[i] - q).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<int>(i);
        }
    }
    return {best, std::sqrt(best_d2)};
}

/// Full-graph Dijkstra from one source (no radius restriction).
inline std::vector<double> dijkstra_all(const nrr::Surface& surface, int source) {
    const int n = surface.point_count();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<char> done(n, 0);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    dist[source] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (done[v]) continue;
        done[v] = 1;
        for (const auto& [w, len] : surface.adjacency[v]) {
            if (dist[v] + len < dist[w]) {
                dist[w] = dist[v] + len;
                heap.emplace(dist[w], w);
            }
        }
    }
    return dist;
}

inline nrr::Surface surface_from_edges(std::vector<Vec3> points,
                                       std::vector<std::pair<int, int>> edges) {
    nrr::Surface s;
    s.points = std::move(points);
    s.edges = std::move(edges);
    s.finalize_edges();
    return s;
}

// ------------------------------------------------------------- generators

inline Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    return q.toRotationMatrix();
}

inline std::vector<Vec3> random_points(std::mt19937_64& rng, int n, double extent = 1.0) {
    std::uniform_real_distribution<double> uni(-extent, extent);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = Vec3(uni(rng), uni(rng), uni(rng));
    return pts;
}

/// Triangulated rectangle in the xy plane: nx * ny vertices.
inline nrr::Surface make_strip(int nx, int ny, double len_x = 1.0, double len_y = 0.5) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            pts.emplace_back(len_x * i / (nx - 1), len_y * j / (ny - 1), 0.0);
    std::vector<std::array<int, 3>> faces;
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = j * nx + i, b = j * nx + i + 1;
            const int c = (j + 1) * nx + i, d = (j + 1) * nx + i + 1;
            faces.push_back({a, b, d});
            faces.push_back({a, d, c});
        }
    }
    return nrr::make_surface(std::move(pts), std::move(faces));
}

struct WarpParams {
    double amplitude = 0.05;
    double frequency = 1.0;
    double phase = 0.0;
    double tilt = 0.0;  // secondary bend along y
};

inline WarpParams random_warp(std::mt19937_64& rng, double amplitude_scale = 1.0) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    WarpParams w;
    w.amplitude = amplitude_scale * (0.03 + 0.05 * uni(rng));
    w.frequency = 0.6 + 0.9 * uni(rng);
    w.phase = uni(rng);
    w.tilt = 0.3 * uni(rng);
    return w;
}

inline Vec3 warp_point(const Vec3& p, const WarpParams& w) {
    const double z = w.amplitude * std::sin(2.0 * M_PI * (w.frequency * p.x() + w.phase)) +
                     w.tilt * w.amplitude * std::sin(2.0 * M_PI * p.y());
    return {p.x(), p.y(), p.z() + z};
}

inline nrr::Surface warped_copy(const nrr::Surface& s, const WarpParams& w) {
    nrr::Surface out = s;
    for (auto& p : out.points) p = warp_point(p, w);
    out.finalize_edges();
    return out;
}

/// Latitude/longitude sphere with rings*segments quads.
inline nrr::Surface make_uv_sphere(int rings, int segments, double radius = 1.0) {
    std::vector<Vec3> pts;
    std::vector<std::array<int, 3>> faces;
    pts.emplace_back(0.0, 0.0, radius);  // north pole
    for (int r = 1; r < rings; ++r) {
        const double phi = M_PI * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double theta = 2.0 * M_PI * s / segments;
            pts.emplace_back(radius * std::sin(phi) * std::cos(theta),
                             radius * std::sin(phi) * std::sin(theta),
                             radius * std::cos(phi));
        }
    }
    pts.emplace_back(0.0, 0.0, -radius);  // south pole
    const int south = static_cast<int>(pts.size()) - 1;
    auto ring_at = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) faces.push_back({0, ring_at(1, s), ring_at(1, s + 1)});
    for (int r = 1; r + 1 < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            const int a = ring_at(r, s), b = ring_at(r, s + 1);
            const int c = ring_at(r + 1, s), d = ring_at(r + 1, s + 1);
            faces.push_back({a, d, b});
            faces.push_back({a, c, d});
        }
    }
    for (int s = 0; s < segments; ++s)
        faces.push_back({south, ring_at(rings - 1, s + 1), ring_at(rings - 1, s)});
    return nrr::make_surface(std::move(pts), std::move(faces));
}

// ------------------------------------------------------- graph invariants

/// Checks every structural invariant of a built deformation graph; returns an
/// empty string on success and a description of the first violation otherwise.
inline std::string check_graph_invariants(const nrr::DeformationGraph& g,
                                          const nrr::Surface& source) {
    const int n = source.point_count();
    for (int idx : g.node_indices)
        if (idx < 0 || idx >= n) return "node index out of range";
    for (int i = 0; i < n; ++i) {
        if (g.influence[i].empty()) return "empty influence set";
        double sum = 0.0;
        for (const auto& e : g.influence[i]) {
            if (!(e.weight > 0.0)) return "non-positive influence weight";
            if (!(e.distance < g.radius)) return "influence distance not below radius";
            sum += e.weight;
        }
        if (std::abs(sum - 1.0) > 1e-10) return "influence weights do not sum to 1";
    }
    for (const auto& [a, b] : g.graph_edges) {
        bool shared = false;
        for (int i = 0; i < n && !shared; ++i) {
            bool has_a = false, has_b = false;
            for (const auto& e : g.influence[i]) {
                has_a |= e.node == a;
                has_b |= e.node == b;
            }
            shared = has_a && has_b;
        }
        if (!shared) return "edge between nodes with no shared influenced point";
    }
    if (!g.reg_weights.empty()) {
        double mean = 0.0;
        for (double c : g.reg_weights) mean += c;
        mean /= static_cast<double>(g.reg_weights.size());
        if (std::abs(mean - 1.0) > 1e-10) return "reg weight mean differs from 1";
    }
    return "";
}

// ------------------------------------------------- scalar energy oracles

/// Target energy recomputed with plain loops straight from the definitions.
inline double oracle_energy(const nrr::Surface& source, const nrr::DeformationGraph& g,
                            const nrr::NodeTransforms& x,
                            const std::vector<Vec3>& corr_points,
                            const std::vector<Mat3>& rotations, double alpha, double beta,
                            double nu_a, double nu_r) {
    auto psi = [](double v, double nu) { return 1.0 - std::exp(-v * v / (2.0 * nu * nu)); };
    double e_align = 0.0;
    for (int i = 0; i < source.point_count(); ++i) {
        Vec3 v_hat = Vec3::Zero();
        for (const auto& e : g.influence[i]) {
            const Vec3& p = g.node_positions[e.node];
            v_hat += e.weight * (x.affine(e.node) * (source.points[i] - p) + p +
                                 x.translation(e.node));
        }
        e_align += psi((v_hat - corr_points[i]).norm(), nu_a);
    }
    double e_reg = 0.0;
    for (size_t k = 0; k < g.reg_pairs.size(); ++k) {
        const auto [i, j] = g.reg_pairs[k];
        const Vec3 d = g.reg_weights[k] *
                       (x.affine(j) * (g.node_positions[i] - g.node_positions[j]) +
                        g.node_positions[j] + x.translation(j) - g.node_positions[i] -
                        x.translation(i));
        e_reg += psi(d.norm(), nu_r);
    }
    double e_rot = 0.0;
    for (int j = 0; j < g.node_count(); ++j)
        e_rot += (x.affine(j) - rotations[j]).squaredNorm();
    return e_align + alpha * e_reg + beta * e_rot;
}

/// Quadratic bound around the anchor iterate, constants dropped, recomputed
/// with plain loops (the matrix assembly must reproduce this exactly).
inline double oracle_surrogate_dropped(const nrr::Surface& source,
                                       const nrr::DeformationGraph& g,
                                       const nrr::NodeTransforms& x,
                                       const nrr::NodeTransforms& anchor,
                                       const std::vector<Vec3>& corr_points,
                                       const std::vector<Mat3>& anchor_rotations,
                                       double alpha, double beta, double nu_a,
                                       double nu_r) {
    auto deform_one = [&](const nrr::NodeTransforms& t, int i) {
        Vec3 v_hat = Vec3::Zero();
        for (const auto& e : g.influence[i]) {
            const Vec3& p = g.node_positions[e.node];
            v_hat += e.weight * (t.affine(e.node) * (source.points[i] - p) + p +
                                 t.translation(e.node));
        }
        return v_hat;
    };
    auto reg_diff = [&](const nrr::NodeTransforms& t, size_t k) {
        const auto [i, j] = g.reg_pairs[k];
        return Vec3(g.reg_weights[k] *
                    (t.affine(j) * (g.node_positions[i] - g.node_positions[j]) +
                     g.node_positions[j] + t.translation(j) - g.node_positions[i] -
                     t.translation(i)));
    };

    double total = 0.0;
    for (int i = 0; i < source.point_count(); ++i) {
        const double r2_anchor = (deform_one(anchor, i) - corr_points[i]).squaredNorm();
        const double w = std::exp(-r2_anchor / (2.0 * nu_a * nu_a)) / (2.0 * nu_a * nu_a);
        total += w * (deform_one(x, i) - corr_points[i]).squaredNorm();
    }
    for (size_t k = 0; k < g.reg_pairs.size(); ++k) {
        const double d2_anchor = reg_diff(anchor, k).squaredNorm();
        const double w = std::exp(-d2_anchor / (2.0 * nu_r * nu_r)) / (2.0 * nu_r * nu_r);
        total += alpha * w * reg_diff(x, k).squaredNorm();
    }
    for (int j = 0; j < g.node_count(); ++j)
        total += beta * (x.affine(j) - anchor_rotations[j]).squaredNorm();
    return total;
}

/// Constant restoring the dropped terms, so that
/// oracle_surrogate_dropped + oracle_surrogate_constant majorizes the
/// fixed-correspondence energy and touches it at the anchor.
inline double oracle_surrogate_constant(const nrr::Surface& source,
                                        const nrr::DeformationGraph& g,
                                        const nrr::NodeTransforms& anchor,
                                        const std::vector<Vec3>& corr_points,
                                        double alpha, double nu_a, double nu_r) {
    auto deform_one = [&](int i) {
        Vec3 v_hat = Vec3::Zero();
        for (const auto& e : g.influence[i]) {
            const Vec3& p = g.node_positions[e.node];
            v_hat += e.weight * (anchor.affine(e.node) * (source.points[i] - p) + p +
                                 anchor.translation(e.node));
        }
        return v_hat;
    };
    auto psi = [](double v2, double nu) { return 1.0 - std::exp(-v2 / (2.0 * nu * nu)); };

    double constant = 0.0;
    for (int i = 0; i < source.point_count(); ++i) {
        const double r2 = (deform_one(i) - corr_points[i]).squaredNorm();
        const double w = std::exp(-r2 / (2.0 * nu_a * nu_a)) / (2.0 * nu_a * nu_a);
        constant += psi(r2, nu_a) - w * r2;
    }
    for (size_t k = 0; k < g.reg_pairs.size(); ++k) {
        const auto [i, j] = g.reg_pairs[k];
        const Vec3 d = g.reg_weights[k] *
                       (anchor.affine(j) * (g.node_positions[i] - g.node_positions[j]) +
                        g.node_positions[j] + anchor.translation(j) - g.node_positions[i] -
                        anchor.translation(i));
        const double d2 = d.squaredNorm();
        const double w = std::exp(-d2 / (2.0 * nu_r * nu_r)) / (2.0 * nu_r * nu_r);
        constant += alpha * (psi(d2, nu_r) - w * d2);
    }
    return constant;
}

}  // namespace test_helpers
