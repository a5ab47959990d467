#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nrr/common.hpp"
#include "nrr/surface.hpp"

namespace nrr {

enum class NoiseMode { Dense, Sparse };

/// Gaussian perturbation of a surface, deterministic under a fixed seed.
/// Dense mode displaces every vertex with i.i.d. per-axis noise of standard
/// deviation sigma; sparse mode displaces only a uniformly sampled fraction
/// of the vertices. Topology is untouched; edge lengths are refreshed.
inline Surface add_noise(const Surface& surface, NoiseMode mode, double sigma,
                         double fraction, uint64_t seed) {
    if (sigma < 0.0) throw ConfigError("add_noise: sigma must be non-negative");
    if (fraction < 0.0 || fraction > 1.0)
        throw ConfigError("add_noise: fraction must lie in [0, 1]");

    Surface out = surface;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<int> targets;
    const int n = surface.point_count();
    if (mode == NoiseMode::Dense) {
        targets.resize(n);
        for (int i = 0; i < n; ++i) targets[i] = i;
    } else {
        std::vector<int> all(n);
        for (int i = 0; i < n; ++i) all[i] = i;
        const auto count = static_cast<size_t>(std::llround(fraction * n));
        targets.resize(count);
        std::sample(all.begin(), all.end(), targets.begin(), count, rng);
    }

    if (sigma > 0.0)
        for (int i : targets)
            out.points[i] += sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    out.finalize_edges();
    return out;
}

enum class CropMode { DepthBuffer, BackFace };

struct CropResult {
    Surface cropped;
    std::vector<char> vertex_mask;  // per input vertex: referenced by a kept face
    std::vector<int> kept_faces;    // indices into the input face list
    std::vector<int> vertex_map;    // input vertex -> cropped vertex, -1 if dropped
};

/// Keeps the part of a mesh visible from a view direction. DepthBuffer mode
/// rasterizes an orthographic depth image and keeps every face that wins at
/// least one pixel; BackFace mode keeps faces whose normal points toward the
/// viewer (normal . view < 0). Faces are required.
inline CropResult partial_overlap_crop(const Surface& surface, const Vec3& view_direction,
                                       CropMode mode = CropMode::DepthBuffer,
                                       int resolution = 512) {
    if (surface.faces.empty())
        throw ConfigError("partial_overlap_crop: surface has no faces");
    if (!(view_direction.norm() > 0.0))
        throw ConfigError("partial_overlap_crop: degenerate view direction");
    if (resolution < 2) throw ConfigError("partial_overlap_crop: resolution too small");

    const Vec3 dir = view_direction.normalized();
    const int face_count = static_cast<int>(surface.faces.size());
    std::vector<char> keep(face_count, 0);

    if (mode == CropMode::BackFace) {
        for (int f = 0; f < face_count; ++f) {
            const auto& tri = surface.faces[f];
            const Vec3 n = (surface.points[tri[1]] - surface.points[tri[0]])
                               .cross(surface.points[tri[2]] - surface.points[tri[0]]);
            if (n.dot(dir) < 0.0) keep[f] = 1;
        }
    } else {
        // orthographic frame (e1, e2, dir); depth grows along the view ray
        Vec3 e1 = std::abs(dir.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        e1 = (e1 - e1.dot(dir) * dir).normalized();
        const Vec3 e2 = dir.cross(e1);

        const int n = surface.point_count();
        std::vector<double> u(n), v(n), depth(n);
        double ulo = 1e300, uhi = -1e300, vlo = 1e300, vhi = -1e300;
        for (int i = 0; i < n; ++i) {
            u[i] = surface.points[i].dot(e1);
            v[i] = surface.points[i].dot(e2);
            depth[i] = surface.points[i].dot(dir);
            ulo = std::min(ulo, u[i]);
            uhi = std::max(uhi, u[i]);
            vlo = std::min(vlo, v[i]);
            vhi = std::max(vhi, v[i]);
        }
        const double span = std::max(uhi - ulo, vhi - vlo);
        if (!(span > 0.0)) throw NumericalError("partial_overlap_crop: flat projection");
        const double pixel = span / resolution;

        std::vector<double> zbuf(static_cast<size_t>(resolution) * resolution, 1e300);
        std::vector<int> owner(zbuf.size(), -1);
        for (int f = 0; f < face_count; ++f) {
            const auto& tri = surface.faces[f];
            const double ua = u[tri[0]], va = v[tri[0]], za = depth[tri[0]];
            const double ub = u[tri[1]], vb = v[tri[1]], zb = depth[tri[1]];
            const double uc = u[tri[2]], vc = v[tri[2]], zc = depth[tri[2]];
            const double area = (ub - ua) * (vc - va) - (uc - ua) * (vb - va);
            if (area == 0.0) continue;  // edge-on face, covers no pixel
            const int px0 = std::max(0, static_cast<int>((std::min({ua, ub, uc}) - ulo) / pixel));
            const int px1 = std::min(resolution - 1,
                                     static_cast<int>((std::max({ua, ub, uc}) - ulo) / pixel));
            const int py0 = std::max(0, static_cast<int>((std::min({va, vb, vc}) - vlo) / pixel));
            const int py1 = std::min(resolution - 1,
                                     static_cast<int>((std::max({va, vb, vc}) - vlo) / pixel));
            for (int py = py0; py <= py1; ++py) {
                for (int px = px0; px <= px1; ++px) {
                    const double pu = ulo + (px + 0.5) * pixel;
                    const double pv = vlo + (py + 0.5) * pixel;
                    const double wa = ((ub - pu) * (vc - pv) - (uc - pu) * (vb - pv)) / area;
                    const double wb = ((uc - pu) * (va - pv) - (ua - pu) * (vc - pv)) / area;
                    const double wc = 1.0 - wa - wb;
                    if (wa < 0.0 || wb < 0.0 || wc < 0.0) continue;
                    const double z = wa * za + wb * zb + wc * zc;
                    const size_t at = static_cast<size_t>(py) * resolution + px;
                    if (z < zbuf[at]) {
                        zbuf[at] = z;
                        owner[at] = f;
                    }
                }
            }
        }
        for (int winner : owner)
            if (winner >= 0) keep[winner] = 1;
    }

    CropResult result;
    result.vertex_mask.assign(surface.point_count(), 0);
    result.vertex_map.assign(surface.point_count(), -1);
    for (int f = 0; f < face_count; ++f) {
        if (!keep[f]) continue;
        result.kept_faces.push_back(f);
        for (int c : surface.faces[f]) result.vertex_mask[c] = 1;
    }

    int next = 0;
    for (int i = 0; i < surface.point_count(); ++i) {
        if (result.vertex_mask[i]) {
            result.vertex_map[i] = next++;
            result.cropped.points.push_back(surface.points[i]);
        }
    }
    for (int f : result.kept_faces) {
        const auto& tri = surface.faces[f];
        result.cropped.faces.push_back({result.vertex_map[tri[0]], result.vertex_map[tri[1]],
                                        result.vertex_map[tri[2]]});
    }
    if (!result.cropped.faces.empty())
        result.cropped.edges = edges_from_faces(result.cropped.faces,
                                                result.cropped.point_count());
    result.cropped.finalize_edges();
    return result;
}

}  // namespace nrr
