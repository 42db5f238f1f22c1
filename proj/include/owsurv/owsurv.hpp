#pragma once

#include "owsurv/error.hpp"
#include "owsurv/core_data.hpp"
#include "owsurv/newton.hpp"
#include "owsurv/propensity.hpp"
#include "owsurv/censoring.hpp"
#include "owsurv/weights.hpp"
#include "owsurv/estimators.hpp"
#include "owsurv/pipeline.hpp"
#include "owsurv/random.hpp"
#include "owsurv/parallel.hpp"
#include "owsurv/variance.hpp"
#include "owsurv/simulation.hpp"
#include "owsurv/io.hpp"
