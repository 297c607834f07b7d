#pragma once

#include "snn/adaptive.hpp"
#include "snn/analysis.hpp"
#include "snn/config.hpp"
#include "snn/density.hpp"
#include "snn/errors.hpp"
#include "snn/grid.hpp"
#include "snn/initial.hpp"
#include "snn/io.hpp"
#include "snn/jump.hpp"
#include "snn/model.hpp"
#include "snn/numeric.hpp"
#include "snn/ode.hpp"
#include "snn/parallel.hpp"
#include "snn/particle.hpp"
#include "snn/rng.hpp"
#include "snn/strang.hpp"
#include "snn/thinning.hpp"
#include "snn/transport.hpp"
