#pragma once

#include "fishermarket/error.hpp"
#include "fishermarket/scenario.hpp"
#include "fishermarket/utility.hpp"
#include "fishermarket/trading_post.hpp"
#include "fishermarket/best_response.hpp"
#include "fishermarket/equilibrium.hpp"
#include "fishermarket/potential.hpp"
#include "fishermarket/report.hpp"
#include "fishermarket/dynamics.hpp"
#include "fishermarket/scenarios.hpp"
#include "fishermarket/interior_point.hpp"
#include "fishermarket/solvers.hpp"
#include "fishermarket/json_io.hpp"
#include "fishermarket/svg.hpp"
#include "fishermarket/experiment.hpp"
