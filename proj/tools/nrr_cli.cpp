// nrr command-line front end: registration pipeline, synthetic test-case
// generation, metrics, and deformation-graph dumps.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "nrr/nrr.hpp"

namespace {

void emit_error(const std::string& kind, const std::string& message, int code) {
    nlohmann::json err = {{"error", {{"kind", kind}, {"message", message}, {"code", code}}}};
    std::cerr << err.dump() << std::endl;
}

nrr::Vec3 parse_direction(const std::vector<double>& dir) {
    if (dir.size() != 3) throw nrr::ConfigError("direction must have three components");
    return {dir[0], dir[1], dir[2]};
}

struct NoiseArgs {
    std::string in, out;
    std::string mode = "dense";
    double sigma = -1.0;  // multiple of the mean edge length; mode-dependent default
    double fraction = 0.05;
    uint64_t seed = 0;
    int knn = 6;
    bool binary_ply = false;
};

void run_synth_noise(const NoiseArgs& a) {
    const nrr::Surface surface = nrr::load_surface(a.in, a.knn);
    nrr::NoiseMode mode;
    if (a.mode == "dense")
        mode = nrr::NoiseMode::Dense;
    else if (a.mode == "sparse")
        mode = nrr::NoiseMode::Sparse;
    else
        throw nrr::ConfigError("noise mode must be 'dense' or 'sparse'");
    const double mult = a.sigma >= 0.0 ? a.sigma
                                       : (mode == nrr::NoiseMode::Dense ? 0.3 : 1.0);
    const nrr::Surface noisy = nrr::add_noise(surface, mode, mult * surface.avg_edge_length,
                                              a.fraction, a.seed);
    nrr::save_surface(noisy, a.out, {}, {a.binary_ply});
}

struct CropArgs {
    std::string in, out, mask_out;
    std::vector<double> dir;
    std::string mode = "depth";
    int resolution = 512;
    int knn = 6;
    bool binary_ply = false;
};

void run_synth_crop(const CropArgs& a) {
    const nrr::Surface surface = nrr::load_surface(a.in, a.knn);
    nrr::CropMode mode;
    if (a.mode == "depth")
        mode = nrr::CropMode::DepthBuffer;
    else if (a.mode == "backface")
        mode = nrr::CropMode::BackFace;
    else
        throw nrr::ConfigError("crop mode must be 'depth' or 'backface'");
    const nrr::CropResult crop =
        nrr::partial_overlap_crop(surface, parse_direction(a.dir), mode, a.resolution);
    nrr::save_surface(crop.cropped, a.out, {}, {a.binary_ply});
    if (!a.mask_out.empty()) nrr::write_mask_file(a.mask_out, crop.vertex_mask);
}

struct MetricsArgs {
    std::string deformed, gt_target, source, flow_file, mask_file, report, per_vertex_out;
    int knn = 6;
};

void run_metrics(const MetricsArgs& a) {
    const nrr::Surface deformed = nrr::load_surface(a.deformed, a.knn);
    nlohmann::json metrics;
    std::vector<double> errors;

    if (!a.gt_target.empty()) {
        const nrr::Surface gt = nrr::load_surface(a.gt_target, a.knn);
        if (gt.point_count() < deformed.point_count())
            throw nrr::ConfigError("ground-truth target has fewer vertices than the result");
        std::vector<nrr::Vec3> ref(deformed.points.size());
        for (size_t i = 0; i < ref.size(); ++i) ref[i] = gt.points[i];
        errors = nrr::pointwise_error(deformed.points, ref);
        metrics["rmse"] = nrr::rmse(errors);
        if (!a.mask_file.empty()) {
            const std::vector<char> mask = nrr::read_mask_file(a.mask_file);
            metrics["overlap"] = nrr::overlap_ratio(mask, deformed.point_count());
            std::vector<double> masked;
            for (size_t i = 0; i < errors.size(); ++i)
                if (i < mask.size() && mask[i]) masked.push_back(errors[i]);
            if (!masked.empty()) metrics["rmse_overlap"] = nrr::rmse(masked);
        }
    }
    if (!a.flow_file.empty()) {
        if (a.source.empty())
            throw nrr::ConfigError("flow metrics need --source for the undeformed points");
        const nrr::Surface source = nrr::load_surface(a.source, a.knn);
        metrics["rs"] = nrr::scene_flow_rmse(deformed.points, source.points,
                                             nrr::read_flow_file(a.flow_file));
    }
    if (metrics.is_null()) throw nrr::ConfigError("no ground truth given to metrics");

    if (!a.per_vertex_out.empty() && !errors.empty())
        nrr::save_surface(deformed, a.per_vertex_out, errors);

    const nlohmann::json doc = {{"metrics", metrics}};
    if (a.report.empty()) {
        std::cout << doc.dump(2) << std::endl;
    } else {
        std::ofstream out(a.report);
        if (!out) throw nrr::IoError("cannot open '" + a.report + "' for writing");
        out << doc.dump(2) << '\n';
    }
}

struct GraphDumpArgs {
    std::string in, out;
    double radius_mult = 5.0;
    int knn = 6;
};

void run_graph_dump(const GraphDumpArgs& a) {
    const nrr::Surface surface = nrr::load_surface(a.in, a.knn);
    if (!(surface.avg_edge_length > 0.0))
        throw nrr::NumericalError("surface has no usable edges");
    const nrr::DeformationGraph graph =
        nrr::build_graph(surface, a.radius_mult * surface.avg_edge_length);
    const nlohmann::json doc = nrr::graph_to_json(graph);
    if (a.out.empty()) {
        std::cout << doc.dump(2) << std::endl;
    } else {
        std::ofstream out(a.out);
        if (!out) throw nrr::IoError("cannot open '" + a.out + "' for writing");
        out << doc.dump(2) << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust non-rigid registration of a source surface to a target point set"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value config file");

    nrr::RunConfig reg;
    std::string gt_mode = "none";
    auto* reg_cmd = app.add_subcommand("register", "Register a source surface to a target");
    reg_cmd->add_option("--source,-s", reg.source_path, "Source mesh or point cloud")
        ->required();
    reg_cmd->add_option("--target,-t", reg.target_path, "Target mesh or point cloud")
        ->required();
    reg_cmd->add_option("--out,-o", reg.output_path, "Deformed source output path")
        ->required();
    reg_cmd->add_option("--report", reg.report_path, "JSON report output path");
    reg_cmd->add_option("--k-alpha", reg.k_alpha, "Regularization weight multiplier");
    reg_cmd->add_option("--k-beta", reg.k_beta, "Rotation term weight multiplier");
    reg_cmd->add_option("--radius-mult", reg.radius_multiplier,
                        "Graph sampling radius as a multiple of the mean edge length");
    reg_cmd->add_option("--eps", reg.eps, "Convergence threshold on max point displacement");
    reg_cmd->add_option("--i-max", reg.i_max, "Max iterations per annealing stage");
    reg_cmd->add_option("--aa-window", reg.aa_window, "Anderson window size (0 disables)");
    reg_cmd->add_option("--knn", reg.knn, "Neighbors for point-cloud connectivity");
    reg_cmd->add_option("--seed", reg.seed, "Random seed (echoed into the report)");
    reg_cmd->add_flag("--binary-ply", reg.binary_ply, "Write binary PLY output");
    reg_cmd->add_flag("--error-channel", reg.error_channel,
                      "Store per-vertex error in the output mesh (needs ground truth)");
    reg_cmd->add_option("--nu-a-init", reg.nu_a_init, "Override the initial alignment nu");
    reg_cmd->add_option("--nu-a-min", reg.nu_a_min, "Override the final alignment nu");
    reg_cmd->add_option("--nu-r-init", reg.nu_r_init, "Override the initial smoothness nu");
    reg_cmd->add_option("--gt", gt_mode, "Ground-truth mode: none, index, flow")
        ->check(CLI::IsMember({"none", "index", "flow"}));
    reg_cmd->add_option("--flow-file", reg.flow_path, "Scene-flow ground-truth file");
    reg_cmd->add_option("--complete-target", reg.complete_target_path,
                        "Uncropped target used as the index-identity reference");
    reg_cmd->add_option("--mask-file", reg.mask_path,
                        "Target vertex membership mask for the overlap ratio");
    reg_cmd->add_option("--landmarks", reg.landmarks_path,
                        "Fixed corresponding pairs, applied in the first stage");

    NoiseArgs noise;
    auto* noise_cmd = app.add_subcommand("synth-noise", "Add Gaussian noise to a mesh");
    noise_cmd->add_option("--in", noise.in, "Input mesh")->required();
    noise_cmd->add_option("--out", noise.out, "Output mesh")->required();
    noise_cmd->add_option("--mode", noise.mode, "dense or sparse")
        ->check(CLI::IsMember({"dense", "sparse"}));
    noise_cmd->add_option("--sigma", noise.sigma,
                          "Noise std dev as a multiple of the mean edge length "
                          "(default 0.3 dense, 1.0 sparse)");
    noise_cmd->add_option("--fraction", noise.fraction,
                          "Fraction of vertices perturbed in sparse mode");
    noise_cmd->add_option("--seed", noise.seed, "Random seed");
    noise_cmd->add_option("--knn", noise.knn, "Neighbors for point-cloud connectivity");
    noise_cmd->add_flag("--binary-ply", noise.binary_ply, "Write binary PLY output");

    CropArgs crop;
    auto* crop_cmd =
        app.add_subcommand("synth-crop", "Keep the part of a mesh visible from a direction");
    crop_cmd->add_option("--in", crop.in, "Input mesh")->required();
    crop_cmd->add_option("--out", crop.out, "Output mesh")->required();
    crop_cmd->add_option("--dir", crop.dir, "View direction, e.g. --dir 0,0,1")
        ->required()
        ->delimiter(',')
        ->expected(3);
    crop_cmd->add_option("--mode", crop.mode, "depth or backface")
        ->check(CLI::IsMember({"depth", "backface"}));
    crop_cmd->add_option("--resolution", crop.resolution, "Depth-buffer resolution");
    crop_cmd->add_option("--mask-out", crop.mask_out, "Vertex membership mask output");
    crop_cmd->add_option("--knn", crop.knn, "Neighbors for point-cloud connectivity");
    crop_cmd->add_flag("--binary-ply", crop.binary_ply, "Write binary PLY output");

    MetricsArgs met;
    auto* met_cmd = app.add_subcommand("metrics", "Evaluate a registration result");
    met_cmd->add_option("--deformed", met.deformed, "Deformed source mesh")->required();
    met_cmd->add_option("--gt-target", met.gt_target,
                        "Index-identity ground-truth target mesh");
    met_cmd->add_option("--source", met.source, "Undeformed source (for flow metrics)");
    met_cmd->add_option("--flow-file", met.flow_file, "Scene-flow ground-truth file");
    met_cmd->add_option("--mask", met.mask_file, "Target vertex membership mask");
    met_cmd->add_option("--report", met.report, "JSON output path (stdout if omitted)");
    met_cmd->add_option("--per-vertex-out", met.per_vertex_out,
                        "Mesh output carrying the per-vertex error channel");
    met_cmd->add_option("--knn", met.knn, "Neighbors for point-cloud connectivity");

    GraphDumpArgs gd;
    auto* gd_cmd = app.add_subcommand("graph-dump", "Export the deformation graph as JSON");
    gd_cmd->add_option("--in", gd.in, "Input mesh")->required();
    gd_cmd->add_option("--out", gd.out, "JSON output path (stdout if omitted)");
    gd_cmd->add_option("--radius-mult", gd.radius_mult,
                       "Sampling radius as a multiple of the mean edge length");
    gd_cmd->add_option("--knn", gd.knn, "Neighbors for point-cloud connectivity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        if (rc == 0) return 0;
        emit_error("config", e.what(), 4);
        return 4;
    }

    try {
        if (reg_cmd->parsed()) {
            if (gt_mode == "index")
                reg.gt_mode = nrr::GroundTruthMode::IndexIdentity;
            else if (gt_mode == "flow")
                reg.gt_mode = nrr::GroundTruthMode::Flow;
            nrr::run_pipeline(reg);
        } else if (noise_cmd->parsed()) {
            run_synth_noise(noise);
        } else if (crop_cmd->parsed()) {
            run_synth_crop(crop);
        } else if (met_cmd->parsed()) {
            run_metrics(met);
        } else if (gd_cmd->parsed()) {
            run_graph_dump(gd);
        }
    } catch (const nrr::IoError& e) {
        emit_error("io", e.what(), 2);
        return 2;
    } catch (const nrr::ConfigError& e) {
        emit_error("config", e.what(), 4);
        return 4;
    } catch (const nrr::NumericalError& e) {
        emit_error("numerical", e.what(), 3);
        return 3;
    } catch (const std::exception& e) {
        emit_error("internal", e.what(), 3);
        return 3;
    }
    return 0;
}
