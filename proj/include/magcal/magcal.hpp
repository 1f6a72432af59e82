#pragma once

#include "magcal/coverage.hpp"
#include "magcal/ellipsoid.hpp"
#include "magcal/filter.hpp"
#include "magcal/geocal.hpp"
#include "magcal/metrics.hpp"
#include "magcal/nncal.hpp"
#include "magcal/pipeline.hpp"
#include "magcal/project.hpp"
#include "magcal/synth.hpp"
#include "magcal/types.hpp"
