#pragma once

#include <cmath>
#include <vector>

#include "nrr/common.hpp"

namespace nrr {

/// Distance of each deformed point to its ground-truth position.
inline std::vector<double> pointwise_error(const std::vector<Vec3>& deformed,
                                           const std::vector<Vec3>& ground_truth) {
    if (deformed.size() != ground_truth.size())
        throw NumericalError("pointwise_error: size mismatch");
    std::vector<double> d(deformed.size());
    for (size_t i = 0; i < deformed.size(); ++i)
        d[i] = (deformed[i] - ground_truth[i]).norm();
    return d;
}

/// Root mean square of the per-point errors.
inline double rmse(const std::vector<double>& errors) {
    if (errors.empty()) throw NumericalError("rmse: no errors given");
    double acc = 0.0;
    for (double d : errors) acc += d * d;
    return std::sqrt(acc / static_cast<double>(errors.size()));
}

/// One ground-truth displacement vector for a source point.
struct SceneFlow {
    int index = -1;
    Vec3 flow = Vec3::Zero();
};

/// RMSE of the deformed positions against source points displaced by their
/// ground-truth flows; points without a flow are excluded.
inline double scene_flow_rmse(const std::vector<Vec3>& deformed,
                              const std::vector<Vec3>& source_points,
                              const std::vector<SceneFlow>& flows) {
    if (flows.empty()) throw NumericalError("scene_flow_rmse: no flows given");
    double acc = 0.0;
    for (const auto& f : flows) {
        if (f.index < 0 || f.index >= static_cast<int>(deformed.size()))
            throw NumericalError("scene_flow_rmse: flow index out of range");
        acc += (deformed[f.index] - (source_points[f.index] + f.flow)).squaredNorm();
    }
    return std::sqrt(acc / static_cast<double>(flows.size()));
}

/// Fraction of source points whose ground-truth correspondent is on the
/// (possibly cropped) target, given per-target-vertex membership.
inline double overlap_ratio(const std::vector<char>& target_membership,
                            const std::vector<int>& gt_correspondence) {
    if (gt_correspondence.empty()) throw NumericalError("overlap_ratio: no points");
    int inside = 0;
    for (int t : gt_correspondence) {
        if (t < 0 || t >= static_cast<int>(target_membership.size()))
            throw NumericalError("overlap_ratio: correspondence index out of range");
        if (target_membership[t]) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(gt_correspondence.size());
}

/// Index-identity convenience: source point i corresponds to target vertex i.
inline double overlap_ratio(const std::vector<char>& target_membership, int source_count) {
    std::vector<int> ident(source_count);
    for (int i = 0; i < source_count; ++i) ident[i] = i;
    return overlap_ratio(target_membership, ident);
}

}  // namespace nrr
