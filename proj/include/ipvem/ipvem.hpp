#pragma once

#include "ipvem/assembly.hpp"
#include "ipvem/cases.hpp"
#include "ipvem/convergence.hpp"
#include "ipvem/dof_map.hpp"
#include "ipvem/element.hpp"
#include "ipvem/geometry.hpp"
#include "ipvem/mesh.hpp"
#include "ipvem/mesh_generators.hpp"
#include "ipvem/mesh_io.hpp"
#include "ipvem/monomials.hpp"
#include "ipvem/parallel.hpp"
#include "ipvem/quadrature.hpp"
#include "ipvem/voronoi.hpp"
