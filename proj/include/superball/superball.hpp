#pragma once

#include "superball/cell_list.hpp"
#include "superball/constants.hpp"
#include "superball/error.hpp"
#include "superball/geometry.hpp"
#include "superball/gibbs.hpp"
#include "superball/io.hpp"
#include "superball/lattice_graph.hpp"
#include "superball/parallel.hpp"
#include "superball/rng.hpp"
#include "superball/sampling.hpp"
#include "superball/thermo.hpp"
#include "superball/version.hpp"
