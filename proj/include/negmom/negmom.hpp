#pragma once

#include "negmom/estimator.hpp"
#include "negmom/observables.hpp"
#include "negmom/permutation.hpp"
#include "negmom/random.hpp"
#include "negmom/state.hpp"
#include "negmom/sweep.hpp"
#include "negmom/weingarten.hpp"
