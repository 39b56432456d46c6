#pragma once

#include "hybridep/baselines.hpp"
#include "hybridep/error.hpp"
#include "hybridep/geometry.hpp"
#include "hybridep/hybrid.hpp"
#include "hybridep/outcome.hpp"
#include "hybridep/problems.hpp"
#include "hybridep/prox.hpp"
#include "hybridep/worker_pool.hpp"
