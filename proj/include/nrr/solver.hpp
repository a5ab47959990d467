#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "nrr/anderson.hpp"
#include "nrr/deformation_graph.hpp"
#include "nrr/energy.hpp"
#include "nrr/kd_tree.hpp"
#include "nrr/surface.hpp"

namespace nrr {

struct SolverConfig {
    double k_alpha = 100.0;
    double k_beta = 1.0;
    double eps = 1e-5;  // convergence threshold on max point displacement
    int i_max = 100;    // iteration cap per annealing stage
    int aa_window = 5;  // Anderson window m; 0 disables acceleration

    // optional Welsch parameter overrides (NaN = derive from the data)
    double nu_a_init = std::numeric_limits<double>::quiet_NaN();
    double nu_a_min = std::numeric_limits<double>::quiet_NaN();
    double nu_r_init = std::numeric_limits<double>::quiet_NaN();
    double nu_r_floor = 1e-8;

    // fixed-pair soft constraints, applied during the first stage only
    std::vector<Landmark> landmarks;

    void validate() const {
        if (!(eps > 0.0)) throw ConfigError("eps must be positive");
        if (i_max < 1) throw ConfigError("i_max must be at least 1");
        if (aa_window < 0) throw ConfigError("aa_window must be >= 0");
        if (k_alpha < 0.0 || k_beta < 0.0)
            throw ConfigError("k_alpha and k_beta must be non-negative");
    }
};

/// Welsch parameters and term weights of the current annealing stage.
struct SolverParams {
    double nu_a = 0.0;
    double nu_r = 0.0;
    double nu_a_min = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    bool alpha_forced_zero = false;
};

/// Halved parameters for the next stage. `done` is set when the pre-step
/// nu_a has already reached its lower bound, i.e. the finished stage was the
/// last one.
struct AnnealResult {
    double nu_a = 0.0;
    double nu_r = 0.0;
    bool done = false;
};

inline AnnealResult anneal(double nu_a, double nu_r, double nu_a_min,
                           double nu_r_floor = 1e-8) {
    if (nu_a == nu_a_min) return {nu_a, nu_r, true};
    return {std::max(nu_a / 2.0, nu_a_min), std::max(nu_r / 2.0, nu_r_floor), false};
}

/// Resolution-balanced term weights; they track the current Welsch
/// parameters, so they are refreshed at every annealing step.
inline void update_term_weights(SolverParams& p, int point_count,
                                const DeformationGraph& graph, const SolverConfig& cfg) {
    if (graph.edge_count() == 0) {
        p.alpha = 0.0;
        p.alpha_forced_zero = true;
    } else {
        p.alpha = cfg.k_alpha *
                  (static_cast<double>(point_count) / graph.edge_count()) *
                  (p.nu_r * p.nu_r) / (p.nu_a * p.nu_a);
    }
    p.beta = cfg.k_beta * (static_cast<double>(point_count) / graph.node_count()) /
             (2.0 * p.nu_a * p.nu_a);
}

/// Initial Welsch parameters: nu_a starts at the median distance from the
/// source points to their closest target samples (clamped from below so a
/// near-identical pair still runs one stage), the lower bound and nu_r come
/// from the mean source edge length.
inline SolverParams init_parameters(const Surface& source, const SpatialIndex& target,
                                    const DeformationGraph& graph,
                                    const SolverConfig& cfg) {
    std::vector<double> dist(source.points.size());
    for (size_t i = 0; i < source.points.size(); ++i)
        dist[i] = target.nearest(source.points[i]).distance;
    std::sort(dist.begin(), dist.end());
    const size_t n = dist.size();
    const double median =
        n % 2 == 1 ? dist[n / 2] : 0.5 * (dist[n / 2 - 1] + dist[n / 2]);

    const double l_bar = source.avg_edge_length;
    SolverParams p;
    p.nu_a_min = std::isnan(cfg.nu_a_min) ? l_bar / std::sqrt(3.0) : cfg.nu_a_min;
    p.nu_a = std::isnan(cfg.nu_a_init) ? std::max(median, p.nu_a_min) : cfg.nu_a_init;
    p.nu_r = std::isnan(cfg.nu_r_init) ? 3.0 * l_bar : cfg.nu_r_init;
    if (!(p.nu_a > 0.0) || !(p.nu_r > 0.0))
        throw NumericalError("init_parameters: Welsch parameters must be positive");
    update_term_weights(p, source.point_count(), graph, cfg);
    return p;
}

struct IterationRecord {
    double e_total = 0.0;
    double e_align = 0.0;
    double e_reg = 0.0;
    double e_rot = 0.0;
    double e_landmark = 0.0;
    bool aa_accepted = false;  // iterate came from Anderson extrapolation
    double max_disp = 0.0;     // displacement caused by this iteration's update
};

struct StageRecord {
    double nu_a = 0.0, nu_r = 0.0;
    double alpha = 0.0, beta = 0.0;
    int reverts = 0;
    bool converged = false;
    std::vector<IterationRecord> iterations;
};

struct RegistrationReport {
    std::vector<StageRecord> stages;
    int degenerate_rotations = 0;
    bool alpha_forced_zero = false;
    double solve_seconds = 0.0;
    double graph_seconds = 0.0;  // filled by the caller that built the graph

    int total_iterations() const {
        int n = 0;
        for (const auto& s : stages) n += static_cast<int>(s.iterations.size());
        return n;
    }
};

struct RegistrationResult {
    NodeTransforms transforms;
    std::vector<Vec3> deformed_points;
    RegistrationReport report;
};

inline Eigen::VectorXd flatten(const NodeTransforms& x) {
    return Eigen::Map<const Eigen::VectorXd>(x.stacked.data(), x.stacked.size());
}

inline NodeTransforms unflatten(const Eigen::VectorXd& v, int node_count) {
    NodeTransforms x;
    x.stacked = Eigen::Map<const Eigen::MatrixXd>(v.data(), 4 * node_count, 3);
    return x;
}

/// One evaluation of the fixed-point map the solver iterates: refresh
/// correspondences and rotation projections at x, rebuild the Gaussian
/// weights, and minimize the quadratic bound.
inline NodeTransforms mm_step(const Surface& source, const DeformationGraph& graph,
                              const SpatialIndex& target, const NodeTransforms& x,
                              const SolverParams& prm) {
    const std::vector<Vec3> deformed = deform_points(source, graph, x);
    const Correspondences corr = find_correspondences(deformed, target);
    const std::vector<Mat3> rotations = project_rotations(x);
    SystemAssembler assembler(source, graph);
    assembler.fill(corr, rotations, alignment_weights(corr, prm.nu_a),
                   regularization_weights(graph, x, prm.nu_r, prm.alpha), prm.beta);
    return assembler.solve();
}

/// Robust registration of a source surface onto a target sample set.
///
/// Runs annealing stages over the Welsch parameters; inside a stage each
/// iteration refreshes correspondences, projections and the target energy at
/// the current iterate, reverts to the last plain update if an extrapolated
/// iterate increased the energy, solves the quadratic bound otherwise, and
/// extrapolates the next iterate from the evaluation window. A stage ends
/// when the deformed points move less than eps, or after i_max accepted
/// iterations; the run ends with the stage at which nu_a reached its bound.
inline RegistrationResult register_surfaces(const Surface& source, const Surface& target,
                                            const DeformationGraph& graph,
                                            const SolverConfig& cfg) {
    cfg.validate();
    if (source.point_count() == 0 || target.point_count() == 0)
        throw NumericalError("register_surfaces: empty surface");

    const auto t_start = std::chrono::steady_clock::now();
    const SpatialIndex target_index(target.points);
    SolverParams prm = init_parameters(source, target_index, graph, cfg);

    RegistrationResult result;
    RegistrationReport& report = result.report;
    report.alpha_forced_zero = prm.alpha_forced_zero;

    SystemAssembler assembler(source, graph, cfg.landmarks);
    AndersonWindow window(cfg.aa_window);

    NodeTransforms x = NodeTransforms::identity(graph.node_count());
    std::vector<Vec3> v_hat = deform_points(source, graph, x);
    NodeTransforms x_mm = x;  // last plain update, the revert target
    bool current_is_aa = false;

    auto landmark_energy = [&](const std::vector<Vec3>& pts) {
        double e = 0.0;
        for (const auto& lm : cfg.landmarks)
            e += (pts[lm.source_index] - lm.target_position).squaredNorm();
        return e;
    };

    for (int stage_index = 0;; ++stage_index) {
        StageRecord stage;
        stage.nu_a = prm.nu_a;
        stage.nu_r = prm.nu_r;
        stage.alpha = prm.alpha;
        stage.beta = prm.beta;

        const double lm_weight =
            (stage_index == 0 && !cfg.landmarks.empty()) ? 1.0 : 0.0;
        window.reset();
        double e_prev = std::numeric_limits<double>::infinity();
        int accepted = 0;
        int passes = 0;

        while (true) {
            if (++passes > 2 * cfg.i_max + 4)
                throw NumericalError("solver stage failed to make progress");

            const Correspondences corr = find_correspondences(v_hat, target_index);
            const std::vector<Mat3> rotations =
                project_rotations(x, &report.degenerate_rotations);
            const EnergyBreakdown e = evaluate_energy(v_hat, x, graph, corr, rotations,
                                                      {prm.alpha, prm.beta, prm.nu_a,
                                                       prm.nu_r});
            const double e_lm = lm_weight != 0.0 ? landmark_energy(v_hat) : 0.0;
            const double e_accept = e.total + lm_weight * e_lm;
            if (!std::isfinite(e_accept))
                throw NumericalError("solver aborted: energy is not finite");

            if (e_accept > e_prev && current_is_aa) {
                // the extrapolated iterate increased the energy; fall back to
                // the plain update. Plain updates are accepted unconditionally:
                // they cannot increase the energy beyond rounding, and they are
                // the revert target, so re-checking them could stall the loop.
                x = x_mm;
                v_hat = deform_points(source, graph, x);
                current_is_aa = false;
                ++stage.reverts;
                continue;
            }
            e_prev = e_accept;

            IterationRecord rec;
            rec.e_total = e.total;
            rec.e_align = e.align;
            rec.e_reg = e.reg;
            rec.e_rot = e.rot;
            rec.e_landmark = e_lm;
            rec.aa_accepted = current_is_aa;

            assembler.fill(corr, rotations, alignment_weights(corr, prm.nu_a),
                           regularization_weights(graph, x, prm.nu_r, prm.alpha),
                           prm.beta, lm_weight);
            x_mm = assembler.solve();
            if (!x_mm.all_finite())
                throw NumericalError("solver aborted: iterate is not finite");

            const Eigen::VectorXd g = flatten(x_mm);
            window.push(g, g - flatten(x));
            current_is_aa = window.extrapolating();
            NodeTransforms x_next = unflatten(window.combine(), graph.node_count());
            if (!x_next.all_finite())
                throw NumericalError("solver aborted: iterate is not finite");

            std::vector<Vec3> v_next = deform_points(source, graph, x_next);
            double max_disp = 0.0;
            for (size_t i = 0; i < v_next.size(); ++i)
                max_disp = std::max(max_disp, (v_next[i] - v_hat[i]).norm());
            rec.max_disp = max_disp;
            stage.iterations.push_back(rec);

            x = std::move(x_next);
            v_hat = std::move(v_next);
            ++accepted;
            if (max_disp < cfg.eps) {
                stage.converged = true;
                break;
            }
            if (accepted >= cfg.i_max) break;
        }

        report.stages.push_back(std::move(stage));
        const AnnealResult next = anneal(prm.nu_a, prm.nu_r, prm.nu_a_min, cfg.nu_r_floor);
        if (next.done) break;
        prm.nu_a = next.nu_a;
        prm.nu_r = next.nu_r;
        update_term_weights(prm, source.point_count(), graph, cfg);
    }

    report.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.transforms = std::move(x);
    result.deformed_points = std::move(v_hat);
    return result;
}

/// Convenience overload: builds the deformation graph with the given radius
/// first (radius in the same units as the surfaces).
inline RegistrationResult register_surfaces(const Surface& source, const Surface& target,
                                            double radius, const SolverConfig& cfg) {
    const DeformationGraph graph = build_graph(source, radius);
    return register_surfaces(source, target, graph, cfg);
}

}  // namespace nrr
