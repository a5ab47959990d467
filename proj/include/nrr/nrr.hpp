#pragma once

#include "nrr/anderson.hpp"
#include "nrr/common.hpp"
#include "nrr/deformation_graph.hpp"
#include "nrr/energy.hpp"
#include "nrr/geodesic.hpp"
#include "nrr/json_export.hpp"
#include "nrr/kd_tree.hpp"
#include "nrr/mesh_io.hpp"
#include "nrr/metrics.hpp"
#include "nrr/pipeline.hpp"
#include "nrr/rotation.hpp"
#include "nrr/solver.hpp"
#include "nrr/surface.hpp"
#include "nrr/synthesis.hpp"
#include "nrr/welsch.hpp"
