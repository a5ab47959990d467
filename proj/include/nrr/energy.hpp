#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <string>
#include <vector>

#include "nrr/common.hpp"
#include "nrr/deformation_graph.hpp"
#include "nrr/kd_tree.hpp"
#include "nrr/rotation.hpp"
#include "nrr/surface.hpp"
#include "nrr/welsch.hpp"

namespace nrr {

/// Closest target sample for each deformed source point.
struct Correspondences {
    std::vector<int> target_index;
    std::vector<Vec3> target_point;
    std::vector<double> squared_distance;

    int size() const { return static_cast<int>(target_index.size()); }
};

inline Correspondences find_correspondences(const std::vector<Vec3>& deformed,
                                            const SpatialIndex& target) {
    Correspondences corr;
    const int n = static_cast<int>(deformed.size());
    corr.target_index.resize(n);
    corr.target_point.resize(n);
    corr.squared_distance.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto hit = target.nearest(deformed[i]);
        corr.target_index[i] = hit.index;
        corr.target_point[i] = target.points()[hit.index];
        corr.squared_distance[i] = hit.distance * hit.distance;
    }
    return corr;
}

/// Rotation projections of all node affine blocks. `degenerate_count`, when
/// given, accumulates how many projections had a near-zero smallest singular
/// value (ambiguous minimizer).
inline std::vector<Mat3> project_rotations(const NodeTransforms& x,
                                           int* degenerate_count = nullptr) {
    std::vector<Mat3> rot(x.node_count());
    for (int j = 0; j < x.node_count(); ++j) {
        double sigma_min = 0.0;
        rot[j] = project_to_rotation(x.affine(j), &sigma_min);
        if (degenerate_count && sigma_min < 1e-12) ++*degenerate_count;
    }
    return rot;
}

struct EnergyParams {
    double alpha = 0.0;
    double beta = 0.0;
    double nu_a = 1.0;
    double nu_r = 1.0;
};

struct EnergyBreakdown {
    double align = 0.0;
    double reg = 0.0;
    double rot = 0.0;
    double total = 0.0;
    double alpha = 0.0, beta = 0.0;
    double nu_a = 0.0, nu_r = 0.0;
};

/// Transformation mismatch of the directed neighbor pair `pair_index`,
/// weighted by its normalization factor: c_ij (A_j (p_i - p_j) + p_j + t_j -
/// (p_i + t_i)).
inline Vec3 reg_difference(const DeformationGraph& graph, const NodeTransforms& x,
                           int pair_index) {
    const auto [i, j] = graph.reg_pairs[pair_index];
    const double c = graph.reg_weights[pair_index];
    const Vec3& pi = graph.node_positions[i];
    const Vec3& pj = graph.node_positions[j];
    return c * (x.affine(j) * (pi - pj) + pj + x.translation(j) - pi - x.translation(i));
}

/// Robust target energy: Welsch-penalized alignment residuals against the
/// given (fixed) correspondences, Welsch-penalized transformation mismatch
/// over neighboring nodes, and the squared Frobenius distance of each affine
/// block to the supplied rotation projections. The correspondences and
/// rotations are caller state so a solver can reuse the ones computed while
/// evaluating a candidate iterate.
inline EnergyBreakdown evaluate_energy(const std::vector<Vec3>& deformed,
                                       const NodeTransforms& x,
                                       const DeformationGraph& graph,
                                       const Correspondences& corr,
                                       const std::vector<Mat3>& rotations,
                                       const EnergyParams& prm) {
    if (corr.size() != static_cast<int>(deformed.size()))
        throw NumericalError("evaluate_energy: correspondence count mismatch");
    if (static_cast<int>(rotations.size()) != graph.node_count())
        throw NumericalError("evaluate_energy: rotation count mismatch");

    EnergyBreakdown e;
    for (size_t i = 0; i < deformed.size(); ++i)
        e.align += welsch_sq((deformed[i] - corr.target_point[i]).squaredNorm(), prm.nu_a);
    for (int k = 0; k < graph.directed_pair_count(); ++k)
        e.reg += welsch_sq(reg_difference(graph, x, k).squaredNorm(), prm.nu_r);
    for (int j = 0; j < graph.node_count(); ++j)
        e.rot += (x.affine(j) - rotations[j]).squaredNorm();
    e.total = e.align + prm.alpha * e.reg + prm.beta * e.rot;
    e.alpha = prm.alpha;
    e.beta = prm.beta;
    e.nu_a = prm.nu_a;
    e.nu_r = prm.nu_r;
    return e;
}

struct LinearSystem {
    Eigen::SparseMatrix<double> K;  // 4N x 4N, symmetric
    Eigen::MatrixXd B;              // 4N x 3
};

/// Fixed-position alignment constraint: one source point pinned to a target
/// position with a plain quadratic residual.
struct Landmark {
    int source_index = -1;
    Vec3 target_position = Vec3::Zero();
};

/// Assembles the normal equations of the quadratic bound around the current
/// iterate. The sparsity pattern depends only on the graph (node pairs that
/// co-influence a point, which are exactly the graph edges, plus diagonals),
/// so it is computed once; each iteration only rewrites the value array from
/// the current Gaussian weights. The value array is written in a fixed order
/// with mirrored coefficients, which makes K bitwise symmetric and the whole
/// assembly reproducible.
class SystemAssembler {
public:
    SystemAssembler(const Surface& source, const DeformationGraph& graph,
                    std::vector<Landmark> landmarks = {})
        : source_(&source), graph_(&graph), landmarks_(std::move(landmarks)) {
        const int n = source.point_count();
        const int m = graph.node_count();
        dim_ = 4 * m;

        for (const auto& lm : landmarks_)
            if (lm.source_index < 0 || lm.source_index >= n)
                throw ConfigError("landmark source index out of range");

        // constant per-point data: f vectors and the weighted node anchor
        point_f_.resize(n);
        anchor_.assign(n, Vec3::Zero());
        for (int i = 0; i < n; ++i) {
            const auto& inf = graph.influence[i];
            point_f_[i].resize(inf.size());
            for (size_t a = 0; a < inf.size(); ++a) {
                const Vec3 d = source.points[i] - graph.node_positions[inf[a].node];
                point_f_[i][a] << inf[a].weight * d, inf[a].weight;
                anchor_[i] += inf[a].weight * graph.node_positions[inf[a].node];
            }
        }

        // constant per-pair data: g vector of the j-side block and the rhs row
        const int pairs = graph.directed_pair_count();
        pair_g_.resize(pairs);
        pair_y_.resize(pairs);
        for (int e = 0; e < pairs; ++e) {
            const auto [i, j] = graph.reg_pairs[e];
            const double c = graph.reg_weights[e];
            const Vec3 d = graph.node_positions[i] - graph.node_positions[j];
            pair_g_[e] << c * d, c;
            pair_y_[e] = c * d;
        }

        build_pattern_and_program();
    }

    /// Weight inputs for one fill: w_align[i] is the Gaussian alignment weight
    /// of point i, w_reg[e] the regularization weight of directed pair e
    /// already scaled by alpha, beta the rotation term weight, and
    /// landmark_weight the shared coefficient of all landmark residuals.
    void fill(const Correspondences& corr, const std::vector<Mat3>& rotations,
              const std::vector<double>& w_align, const std::vector<double>& w_reg,
              double beta, double landmark_weight = 0.0) {
        const int n = source_->point_count();
        if (corr.size() != n) throw NumericalError("assemble: correspondence count mismatch");
        if (static_cast<int>(w_align.size()) != n)
            throw NumericalError("assemble: alignment weight count mismatch");
        if (static_cast<int>(w_reg.size()) != graph_->directed_pair_count())
            throw NumericalError("assemble: regularization weight count mismatch");
        if (static_cast<int>(rotations.size()) != graph_->node_count())
            throw NumericalError("assemble: rotation count mismatch");

        double* val = system_.K.valuePtr();
        std::fill(val, val + system_.K.nonZeros(), 0.0);
        for (const auto& c : align_program_) val[c.dst] += w_align[c.src] * c.coef;
        for (const auto& c : reg_program_) val[c.dst] += w_reg[c.src] * c.coef;
        if (landmark_weight != 0.0)
            for (const auto& c : landmark_program_) val[c.dst] += landmark_weight * c.coef;
        for (int idx : beta_slots_) val[idx] += beta;

        system_.B.setZero(dim_, 3);
        for (int i = 0; i < n; ++i) {
            const Vec3 q = corr.target_point[i] - anchor_[i];
            const auto& inf = graph_->influence[i];
            for (size_t a = 0; a < inf.size(); ++a)
                system_.B.block<4, 3>(4 * inf[a].node, 0) +=
                    (w_align[i] * point_f_[i][a]) * q.transpose();
        }
        for (int e = 0; e < graph_->directed_pair_count(); ++e) {
            const auto [i, j] = graph_->reg_pairs[e];
            const double c = graph_->reg_weights[e];
            system_.B.block<4, 3>(4 * j, 0) += (w_reg[e] * pair_g_[e]) * pair_y_[e].transpose();
            system_.B.row(4 * i + 3) += (w_reg[e] * -c) * pair_y_[e].transpose();
        }
        for (int j = 0; j < graph_->node_count(); ++j)
            system_.B.block<3, 3>(4 * j, 0) += beta * rotations[j].transpose();
        if (landmark_weight != 0.0) {
            for (const auto& lm : landmarks_) {
                const int i = lm.source_index;
                const Vec3 q = lm.target_position - anchor_[i];
                const auto& inf = graph_->influence[i];
                for (size_t a = 0; a < inf.size(); ++a)
                    system_.B.block<4, 3>(4 * inf[a].node, 0) +=
                        (landmark_weight * point_f_[i][a]) * q.transpose();
            }
        }
    }

    const LinearSystem& system() const { return system_; }

    /// Numeric refactorization over the fixed symbolic analysis, then solve.
    NodeTransforms solve() {
        if (!analyzed_) {
            ldlt_.analyzePattern(system_.K);
            analyzed_ = true;
        }
        ldlt_.factorize(system_.K);
        if (ldlt_.info() != Eigen::Success)
            throw NumericalError("linear system not positive definite (" +
                                 describe_failure() + ")");
        NodeTransforms x;
        x.stacked = ldlt_.solve(system_.B);

        const double tol = 1e-8 * (1.0 + system_.B.cwiseAbs().maxCoeff());
        Eigen::MatrixXd residual = system_.B - system_.K * x.stacked;
        if (residual.cwiseAbs().maxCoeff() > tol) {
            x.stacked += ldlt_.solve(residual);
            residual = system_.B - system_.K * x.stacked;
            if (residual.cwiseAbs().maxCoeff() > tol)
                throw NumericalError("linear solve residual above tolerance");
        }
        return x;
    }

private:
    struct Contribution {
        int dst;      // index into K's value array
        int src;      // weight slot
        double coef;  // constant factor
    };

    void build_pattern_and_program() {
        // pattern: 4x4 diagonal block per node plus both halves of each edge
        std::vector<Eigen::Triplet<double>> trips;
        auto add_block = [&](int a, int b) {
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    trips.emplace_back(4 * a + r, 4 * b + c, 1.0);
        };
        for (int j = 0; j < graph_->node_count(); ++j) add_block(j, j);
        for (const auto& [a, b] : graph_->graph_edges) {
            add_block(a, b);
            add_block(b, a);
        }
        system_.K.resize(dim_, dim_);
        system_.K.setFromTriplets(trips.begin(), trips.end());
        system_.K.makeCompressed();
        system_.B.setZero(dim_, 3);

        auto slot = [&](int row, int col) {
            const int* outer = system_.K.outerIndexPtr();
            const int* inner = system_.K.innerIndexPtr();
            const int* lo = inner + outer[col];
            const int* hi = inner + outer[col + 1];
            const int* it = std::lower_bound(lo, hi, row);
            return static_cast<int>(it - inner);
        };

        const int n = source_->point_count();
        for (int i = 0; i < n; ++i) emit_point(i, i, align_program_, slot);
        for (int e = 0; e < graph_->directed_pair_count(); ++e) {
            const auto [i, j] = graph_->reg_pairs[e];
            const double c = graph_->reg_weights[e];
            for (int r = 0; r < 4; ++r)
                for (int cc = 0; cc < 4; ++cc)
                    reg_program_.push_back(
                        {slot(4 * j + r, 4 * j + cc), e, pair_g_[e][r] * pair_g_[e][cc]});
            for (int r = 0; r < 4; ++r) {
                reg_program_.push_back({slot(4 * j + r, 4 * i + 3), e, pair_g_[e][r] * -c});
                reg_program_.push_back({slot(4 * i + 3, 4 * j + r), e, -c * pair_g_[e][r]});
            }
            reg_program_.push_back({slot(4 * i + 3, 4 * i + 3), e, c * c});
        }
        for (size_t l = 0; l < landmarks_.size(); ++l)
            emit_point(landmarks_[l].source_index, static_cast<int>(l), landmark_program_,
                       slot);
        for (int j = 0; j < graph_->node_count(); ++j)
            for (int r = 0; r < 3; ++r)
                beta_slots_.push_back(slot(4 * j + r, 4 * j + r));
    }

    template <typename SlotFn>
    void emit_point(int point, int src_slot, std::vector<Contribution>& program,
                    const SlotFn& slot) {
        const auto& inf = graph_->influence[point];
        for (size_t a = 0; a < inf.size(); ++a) {
            for (size_t b = 0; b < inf.size(); ++b) {
                const Eigen::Vector4d& fa = point_f_[point][a];
                const Eigen::Vector4d& fb = point_f_[point][b];
                for (int r = 0; r < 4; ++r)
                    for (int c = 0; c < 4; ++c)
                        program.push_back({slot(4 * inf[a].node + r, 4 * inf[b].node + c),
                                           src_slot, fa[r] * fb[c]});
            }
        }
    }

    std::string describe_failure() const {
        for (int j = 0; j < graph_->node_count(); ++j) {
            Eigen::Matrix4d block = Eigen::Matrix4d::Zero();
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    block(r, c) = system_.K.coeff(4 * j + r, 4 * j + c);
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(block);
            if (eig.eigenvalues().minCoeff() <= 0.0)
                return "singular diagonal block at node " + std::to_string(j);
        }
        return "indefinite coupling between node blocks";
    }

    const Surface* source_;
    const DeformationGraph* graph_;
    std::vector<Landmark> landmarks_;

    int dim_ = 0;
    std::vector<std::vector<Eigen::Vector4d>> point_f_;
    std::vector<Vec3> anchor_;
    std::vector<Eigen::Vector4d> pair_g_;
    std::vector<Vec3> pair_y_;

    LinearSystem system_;
    std::vector<Contribution> align_program_;
    std::vector<Contribution> reg_program_;
    std::vector<Contribution> landmark_program_;
    std::vector<int> beta_slots_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
    bool analyzed_ = false;
};

/// Gaussian alignment weights at the current iterate, from the squared
/// correspondence distances.
inline std::vector<double> alignment_weights(const Correspondences& corr, double nu_a) {
    std::vector<double> w(corr.size());
    for (int i = 0; i < corr.size(); ++i)
        w[i] = welsch_weight_sq(corr.squared_distance[i], nu_a);
    return w;
}

/// Regularization weights at the current iterate, scaled by alpha.
inline std::vector<double> regularization_weights(const DeformationGraph& graph,
                                                  const NodeTransforms& x, double nu_r,
                                                  double alpha) {
    std::vector<double> w(graph.directed_pair_count());
    for (int e = 0; e < graph.directed_pair_count(); ++e)
        w[e] = alpha * welsch_weight_sq(reg_difference(graph, x, e).squaredNorm(), nu_r);
    return w;
}

/// One-shot assembly of the quadratic bound's normal equations at iterate x.
inline LinearSystem assemble_system(const NodeTransforms& x, const Surface& source,
                                    const DeformationGraph& graph,
                                    const Correspondences& corr,
                                    const std::vector<Mat3>& rotations,
                                    const EnergyParams& prm) {
    SystemAssembler assembler(source, graph);
    assembler.fill(corr, rotations, alignment_weights(corr, prm.nu_a),
                   regularization_weights(graph, x, prm.nu_r, prm.alpha), prm.beta);
    return assembler.system();
}

/// Solves K X = B by sparse LDLT; K must be positive definite.
inline NodeTransforms solve_system(const LinearSystem& system) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(system.K);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("linear system not positive definite");
    NodeTransforms x;
    x.stacked = ldlt.solve(system.B);
    const double tol = 1e-8 * (1.0 + system.B.cwiseAbs().maxCoeff());
    Eigen::MatrixXd residual = system.B - system.K * x.stacked;
    if (residual.cwiseAbs().maxCoeff() > tol) {
        x.stacked += ldlt.solve(residual);
        residual = system.B - system.K * x.stacked;
        if (residual.cwiseAbs().maxCoeff() > tol)
            throw NumericalError("linear solve residual above tolerance");
    }
    return x;
}

}  // namespace nrr
