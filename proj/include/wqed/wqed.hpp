#pragma once

#include "wqed/analysis.hpp"
#include "wqed/baseline.hpp"
#include "wqed/basis.hpp"
#include "wqed/evolution.hpp"
#include "wqed/io.hpp"
#include "wqed/lazy.hpp"
#include "wqed/operators.hpp"
#include "wqed/oracle.hpp"
#include "wqed/scenarios.hpp"
#include "wqed/state.hpp"
#include "wqed/svg.hpp"
#include "wqed/time_grid.hpp"
#include "wqed/version.hpp"
#include "wqed/views.hpp"
