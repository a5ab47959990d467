#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <deque>

#include "nrr/common.hpp"

namespace nrr {

/// One fixed-point evaluation: the map output G and its residual F = G - X.
struct AndersonEntry {
    Eigen::VectorXd g;
    Eigen::VectorXd f;
};

/// Accelerated iterate from the evaluation history (oldest first, current
/// last), using at most `m` residual differences. With fewer than two entries
/// (or m = 0) this is the plain fixed-point update G. The coefficient
/// least-squares problem is solved by QR; a rank-deficient difference matrix
/// falls back to Tikhonov-regularized normal equations and never fails.
inline Eigen::VectorXd anderson_combine(const std::deque<AndersonEntry>& history, int m) {
    if (history.empty()) throw NumericalError("anderson_combine: empty history");
    const int n = static_cast<int>(history.size());
    const int mk = std::min(n - 1, m);
    const Eigen::VectorXd& g_last = history[n - 1].g;
    if (mk <= 0) return g_last;

    const Eigen::Index dim = g_last.size();
    Eigen::MatrixXd df(dim, mk), dg(dim, mk);
    for (int j = 1; j <= mk; ++j) {
        df.col(j - 1) = history[n - j].f - history[n - j - 1].f;
        dg.col(j - 1) = history[n - j].g - history[n - j - 1].g;
    }

    Eigen::VectorXd theta;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(df);
    if (qr.rank() == mk) {
        theta = qr.solve(history[n - 1].f);
    } else {
        Eigen::MatrixXd normal = df.transpose() * df;
        normal.diagonal().array() += 1e-10;
        theta = normal.ldlt().solve(df.transpose() * history[n - 1].f);
    }
    return g_last - dg * theta;
}

/// Sliding evaluation window for Anderson acceleration: the current entry
/// plus up to `m` previous ones.
class AndersonWindow {
public:
    explicit AndersonWindow(int m) : m_(m) {
        if (m < 0) throw ConfigError("AndersonWindow: window must be >= 0");
    }

    void reset() { history_.clear(); }

    void push(Eigen::VectorXd g, Eigen::VectorXd f) {
        history_.push_back({std::move(g), std::move(f)});
        while (static_cast<int>(history_.size()) > m_ + 1) history_.pop_front();
    }

    /// True when the next combine() actually extrapolates.
    bool extrapolating() const { return m_ > 0 && history_.size() > 1; }

    Eigen::VectorXd combine() const { return anderson_combine(history_, m_); }

    int size() const { return static_cast<int>(history_.size()); }

private:
    int m_;
    std::deque<AndersonEntry> history_;
};

}  // namespace nrr
