#pragma once

#include "physarum/error.hpp"
#include "physarum/graph.hpp"
#include "physarum/laplacian.hpp"
#include "physarum/cppa.hpp"
#include "physarum/maxflow.hpp"
#include "physarum/mincostflow.hpp"
#include "physarum/ctap.hpp"
#include "physarum/gen.hpp"
#include "physarum/io.hpp"
