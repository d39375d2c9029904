#pragma once

#include "shellopt/error.hpp"
#include "shellopt/mesh/generators.hpp"
#include "shellopt/mesh/mesh_io.hpp"
#include "shellopt/socp/solver.hpp"
#include "shellopt/field/solve_field.hpp"
#include "shellopt/beam/mechanics.hpp"
#include "shellopt/cellopt/optimize.hpp"
#include "shellopt/inflate/solid.hpp"
#include "shellopt/pipeline/run.hpp"
