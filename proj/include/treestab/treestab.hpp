#pragma once

// Simulation and verification toolkit for silent self-stabilizing
// guarded-command algorithms on networks endowed with a spanning forest.

#include "treestab/algorithms.hpp"
#include "treestab/analysis.hpp"
#include "treestab/bounds.hpp"
#include "treestab/core.hpp"
#include "treestab/daemon.hpp"
#include "treestab/json_io.hpp"
#include "treestab/transformer.hpp"
