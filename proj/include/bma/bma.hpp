#pragma once

#include "bma/averaging.hpp"
#include "bma/distributions.hpp"
#include "bma/ensemble.hpp"
#include "bma/errors.hpp"
#include "bma/forecasting.hpp"
#include "bma/metrics.hpp"
#include "bma/models/dthp.hpp"
#include "bma/models/model.hpp"
#include "bma/models/parameters.hpp"
#include "bma/models/scenario.hpp"
#include "bma/models/seir.hpp"
#include "bma/parallel.hpp"
#include "bma/particle_filter.hpp"
#include "bma/rng.hpp"
#include "bma/smc2.hpp"
