#pragma once

#include <Eigen/Dense>

#include "nrr/common.hpp"

namespace nrr {

/// Orthogonal projection of a 3x3 matrix onto the rotation group (minimal
/// Frobenius distance): A = U S V^T gives R = U diag(1, 1, det(UV^T)) V^T.
/// If `sigma_min` is given it receives the smallest singular value; values
/// below ~1e-12 mean the minimizer is ambiguous and the result is simply the
/// deterministic choice of this SVD.
inline Mat3 project_to_rotation(const Mat3& a, double* sigma_min = nullptr) {
    if (!a.allFinite())
        throw NumericalError("project_to_rotation: non-finite input matrix");
    Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    if (sigma_min) *sigma_min = svd.singularValues()(2);
    Vec3 signs(1.0, 1.0, 1.0);
    if ((u * v.transpose()).determinant() < 0.0) signs(2) = -1.0;
    return u * signs.asDiagonal() * v.transpose();
}

}  // namespace nrr
