#pragma once

#include <json.hpp>

#include "nrr/deformation_graph.hpp"
#include "nrr/solver.hpp"

namespace nrr {

/// Stage-by-stage solver trace. Landmark energies are emitted only when the
/// run used landmarks, so the default schema stays minimal.
inline nlohmann::json report_to_json(const RegistrationReport& report,
                                     bool include_landmark_energy = false) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : report.stages) {
        nlohmann::json iters = nlohmann::json::array();
        for (const auto& it : s.iterations) {
            nlohmann::json rec = {{"E", it.e_total},          {"E_align", it.e_align},
                                  {"E_reg", it.e_reg},        {"E_rot", it.e_rot},
                                  {"aa_accepted", it.aa_accepted},
                                  {"max_disp", it.max_disp}};
            if (include_landmark_energy) rec["E_landmark"] = it.e_landmark;
            iters.push_back(std::move(rec));
        }
        stages.push_back({{"nu_a", s.nu_a},
                          {"nu_r", s.nu_r},
                          {"alpha", s.alpha},
                          {"beta", s.beta},
                          {"reverts", s.reverts},
                          {"converged", s.converged},
                          {"iterations", std::move(iters)}});
    }
    return {{"stages", std::move(stages)},
            {"degenerate_rotations", report.degenerate_rotations},
            {"alpha_forced_zero", report.alpha_forced_zero},
            {"total_iterations", report.total_iterations()}};
}

/// Full graph dump: nodes, edges, per-point influence lists (node id, weight,
/// cached geodesic distance) and the directed regularization weight table.
inline nlohmann::json graph_to_json(const DeformationGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& p : graph.node_positions) nodes.push_back({p.x(), p.y(), p.z()});

    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : graph.graph_edges) edges.push_back({a, b});

    nlohmann::json influence = nlohmann::json::array();
    for (const auto& list : graph.influence) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : list)
            entries.push_back({{"node", e.node}, {"weight", e.weight},
                               {"distance", e.distance}});
        influence.push_back(std::move(entries));
    }

    nlohmann::json reg = nlohmann::json::array();
    for (size_t k = 0; k < graph.reg_pairs.size(); ++k)
        reg.push_back({{"i", graph.reg_pairs[k].first},
                       {"j", graph.reg_pairs[k].second},
                       {"c", graph.reg_weights[k]}});

    return {{"radius", graph.radius},
            {"node_indices", graph.node_indices},
            {"node_positions", std::move(nodes)},
            {"edges", std::move(edges)},
            {"influence", std::move(influence)},
            {"reg_weights", std::move(reg)}};
}

}  // namespace nrr
