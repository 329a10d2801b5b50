#pragma once

#include "sdehmc/layout.hpp"
#include "sdehmc/model.hpp"
#include "sdehmc/lattice.hpp"
#include "sdehmc/energy.hpp"
#include "sdehmc/integrator.hpp"
#include "sdehmc/sampler.hpp"
#include "sdehmc/diagnostics.hpp"
#include "sdehmc/io.hpp"
#include "sdehmc/config.hpp"
#include "sdehmc/commands.hpp"
