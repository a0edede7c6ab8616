#ifndef FAIRENS_FAIRENS_HPP
#define FAIRENS_FAIRENS_HPP

#include "fairens/base_ensemble.hpp"
#include "fairens/core.hpp"
#include "fairens/detectors.hpp"
#include "fairens/experiment.hpp"
#include "fairens/fairness.hpp"
#include "fairens/fixtures.hpp"
#include "fairens/ingestion.hpp"
#include "fairens/io.hpp"
#include "fairens/metrics.hpp"
#include "fairens/random.hpp"
#include "fairens/solver.hpp"

#endif  // FAIRENS_FAIRENS_HPP
