#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace nrr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// File could not be read or written, or its contents are malformed.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An option or input parameter is outside its documented range.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numerical operation failed (singular system, degenerate geometry, NaN).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

inline bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace nrr
