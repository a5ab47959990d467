#pragma once

#include <chrono>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrr/common.hpp"
#include "nrr/json_export.hpp"
#include "nrr/mesh_io.hpp"
#include "nrr/metrics.hpp"
#include "nrr/solver.hpp"

namespace nrr {

enum class GroundTruthMode { None, IndexIdentity, Flow };

/// Everything one `register` invocation needs.
struct RunConfig {
    std::string source_path;
    std::string target_path;
    std::string output_path;
    std::string report_path;

    double k_alpha = 100.0;
    double k_beta = 1.0;
    double radius_multiplier = 5.0;  // R = multiplier * mean source edge length
    double eps = 1e-5;
    int i_max = 100;
    int aa_window = 5;
    int knn = 6;
    uint64_t seed = 0;
    bool binary_ply = false;
    bool error_channel = false;  // write per-vertex error into the output mesh

    double nu_a_init = std::numeric_limits<double>::quiet_NaN();
    double nu_a_min = std::numeric_limits<double>::quiet_NaN();
    double nu_r_init = std::numeric_limits<double>::quiet_NaN();

    GroundTruthMode gt_mode = GroundTruthMode::None;
    std::string flow_path;             // for GroundTruthMode::Flow
    std::string complete_target_path;  // index-identity reference for cropped targets
    std::string mask_path;             // target vertex membership, for the overlap ratio
    std::string landmarks_path;        // fixed-pair constraints, first stage only

    void validate() const {
        if (source_path.empty() || target_path.empty())
            throw ConfigError("source and target paths are required");
        if (output_path.empty()) throw ConfigError("output path is required");
        if (!(radius_multiplier > 0.0)) throw ConfigError("radius multiplier must be positive");
        if (knn < 1) throw ConfigError("knn must be at least 1");
        if (gt_mode == GroundTruthMode::Flow && flow_path.empty())
            throw ConfigError("flow ground truth requires a flow file");
        SolverConfig sc;
        sc.k_alpha = k_alpha;
        sc.k_beta = k_beta;
        sc.eps = eps;
        sc.i_max = i_max;
        sc.aa_window = aa_window;
        sc.validate();
    }
};

/// Flow file: one `index tx ty tz` line per source point that has a flow.
inline std::vector<SceneFlow> read_flow_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open flow file '" + path + "'");
    std::vector<SceneFlow> flows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        SceneFlow f;
        if (!(ls >> f.index)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            if (line[line.find_first_not_of(" \t\r")] == '#') continue;
            io_detail::fail(path, lineno, "malformed flow record");
        }
        if (!(ls >> f.flow.x() >> f.flow.y() >> f.flow.z()))
            io_detail::fail(path, lineno, "malformed flow record");
        if (f.index < 0) io_detail::fail(path, lineno, "negative flow index");
        flows.push_back(f);
    }
    return flows;
}

/// Landmark file: one `source_index target_index` pair per line.
inline std::vector<std::pair<int, int>> read_landmark_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open landmark file '" + path + "'");
    std::vector<std::pair<int, int>> pairs;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        int s, t;
        if (!(ls >> s)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            if (line[line.find_first_not_of(" \t\r")] == '#') continue;
            io_detail::fail(path, lineno, "malformed landmark record");
        }
        if (!(ls >> t)) io_detail::fail(path, lineno, "malformed landmark record");
        pairs.emplace_back(s, t);
    }
    return pairs;
}

/// Mask file: one 0/1 per target vertex.
inline std::vector<char> read_mask_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mask file '" + path + "'");
    std::vector<char> mask;
    int v;
    while (in >> v) mask.push_back(v != 0 ? 1 : 0);
    return mask;
}

inline void write_mask_file(const std::string& path, const std::vector<char>& mask) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (char m : mask) out << (m ? 1 : 0) << '\n';
    if (!out) throw IoError("write to '" + path + "' failed");
}

struct PipelineResult {
    RegistrationResult registration;
    nlohmann::json document;
    std::vector<Vec3> deformed_original_units;
};

/// Full registration pipeline: load, normalize the pair to a unit joint
/// bounding-box diagonal, build the deformation graph, run the solver, map
/// the result back to the original units, attach metrics when ground truth is
/// available, and write the deformed mesh plus the JSON report.
inline PipelineResult run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto seconds_since = [](auto from) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - from)
            .count();
    };

    const Surface source_original = load_surface(cfg.source_path, cfg.knn);
    const Surface target_original = load_surface(cfg.target_path, cfg.knn);
    const double load_s = seconds_since(t0);

    Surface source = source_original;
    Surface target = target_original;
    const Normalization norm = normalize_pair(source, target);
    if (!(source.avg_edge_length > 0.0))
        throw NumericalError("source surface has no usable edges");

    const auto t_graph = std::chrono::steady_clock::now();
    const DeformationGraph graph =
        build_graph(source, cfg.radius_multiplier * source.avg_edge_length);
    const double graph_s = seconds_since(t_graph);

    SolverConfig solver_cfg;
    solver_cfg.k_alpha = cfg.k_alpha;
    solver_cfg.k_beta = cfg.k_beta;
    solver_cfg.eps = cfg.eps;
    solver_cfg.i_max = cfg.i_max;
    solver_cfg.aa_window = cfg.aa_window;
    solver_cfg.nu_a_init = cfg.nu_a_init;
    solver_cfg.nu_a_min = cfg.nu_a_min;
    solver_cfg.nu_r_init = cfg.nu_r_init;
    if (!cfg.landmarks_path.empty()) {
        for (const auto& [s, t] : read_landmark_file(cfg.landmarks_path)) {
            if (s < 0 || s >= source.point_count() || t < 0 || t >= target.point_count())
                throw ConfigError("landmark index out of range");
            solver_cfg.landmarks.push_back({s, target.points[t]});
        }
    }

    const auto t_reg = std::chrono::steady_clock::now();
    PipelineResult result;
    result.registration = register_surfaces(source, target, graph, solver_cfg);
    result.registration.report.graph_seconds = graph_s;
    const double register_s = seconds_since(t_reg);

    result.deformed_original_units.resize(result.registration.deformed_points.size());
    for (size_t i = 0; i < result.registration.deformed_points.size(); ++i)
        result.deformed_original_units[i] =
            norm.invert(result.registration.deformed_points[i]);

    // metrics in original units
    nlohmann::json metrics;
    std::vector<double> errors;
    if (cfg.gt_mode == GroundTruthMode::IndexIdentity) {
        const Surface* reference = &target_original;
        Surface complete;
        if (!cfg.complete_target_path.empty()) {
            complete = load_surface(cfg.complete_target_path, cfg.knn);
            reference = &complete;
        }
        if (reference->point_count() < source.point_count())
            throw ConfigError("ground-truth target has fewer vertices than the source");
        std::vector<Vec3> gt(result.deformed_original_units.size());
        for (size_t i = 0; i < gt.size(); ++i) gt[i] = reference->points[i];
        errors = pointwise_error(result.deformed_original_units, gt);
        metrics["rmse"] = rmse(errors);
    } else if (cfg.gt_mode == GroundTruthMode::Flow) {
        const std::vector<SceneFlow> flows = read_flow_file(cfg.flow_path);
        metrics["rs"] =
            scene_flow_rmse(result.deformed_original_units, source_original.points, flows);
    }
    if (!cfg.mask_path.empty()) {
        const std::vector<char> mask = read_mask_file(cfg.mask_path);
        metrics["overlap"] = overlap_ratio(mask, source.point_count());
    }

    Surface deformed_surface = source_original;
    deformed_surface.points = result.deformed_original_units;
    deformed_surface.finalize_edges();
    save_surface(deformed_surface, cfg.output_path,
                 cfg.error_channel ? errors : std::vector<double>{},
                 {cfg.binary_ply});

    nlohmann::json doc;
    doc["config"] = {{"source", cfg.source_path},
                     {"target", cfg.target_path},
                     {"output", cfg.output_path},
                     {"k_alpha", cfg.k_alpha},
                     {"k_beta", cfg.k_beta},
                     {"radius_multiplier", cfg.radius_multiplier},
                     {"eps", cfg.eps},
                     {"i_max", cfg.i_max},
                     {"aa_window", cfg.aa_window},
                     {"knn", cfg.knn},
                     {"seed", cfg.seed}};
    doc["graph"] = {{"node_count", graph.node_count()},
                    {"edge_count", graph.edge_count()},
                    {"radius", graph.radius}};
    doc["normalization"] = {{"scale", norm.scale},
                            {"center", {norm.center.x(), norm.center.y(), norm.center.z()}}};
    const nlohmann::json solver_json =
        report_to_json(result.registration.report, !solver_cfg.landmarks.empty());
    doc["stages"] = solver_json.at("stages");
    doc["solver"] = {{"degenerate_rotations", solver_json.at("degenerate_rotations")},
                     {"alpha_forced_zero", solver_json.at("alpha_forced_zero")},
                     {"total_iterations", solver_json.at("total_iterations")}};
    if (!metrics.is_null()) doc["metrics"] = metrics;
    doc["timings"] = {{"load_s", load_s},
                      {"graph_s", graph_s},
                      {"register_s", register_s},
                      {"total_s", seconds_since(t0)}};

    if (!cfg.report_path.empty()) {
        std::ofstream rep(cfg.report_path);
        if (!rep) throw IoError("cannot open '" + cfg.report_path + "' for writing");
        rep << doc.dump(2) << '\n';
        if (!rep) throw IoError("write to '" + cfg.report_path + "' failed");
    }
    result.document = std::move(doc);
    return result;
}

}  // namespace nrr
