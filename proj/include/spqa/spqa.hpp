#pragma once

#include "spqa/core/eigensolver.hpp"
#include "spqa/core/hermitian.hpp"
#include "spqa/core/sectors.hpp"
#include "spqa/core/types.hpp"
#include "spqa/engine/fidelity.hpp"
#include "spqa/engine/gaps.hpp"
#include "spqa/engine/interpolation.hpp"
#include "spqa/engine/ode.hpp"
#include "spqa/engine/propagator.hpp"
#include "spqa/engine/schedule.hpp"
#include "spqa/engine/sdac.hpp"
#include "spqa/experiments/config.hpp"
#include "spqa/experiments/output.hpp"
#include "spqa/experiments/runner.hpp"
#include "spqa/models/collective_spin.hpp"
#include "spqa/models/driven_model.hpp"
#include "spqa/models/noise.hpp"
#include "spqa/models/single_particle.hpp"
#include "spqa/oracle/checks.hpp"
#include "spqa/oracle/full_space.hpp"
