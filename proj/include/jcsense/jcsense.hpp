#pragma once

#include "jcsense/analytic.hpp"
#include "jcsense/dop853.hpp"
#include "jcsense/dynamics.hpp"
#include "jcsense/errors.hpp"
#include "jcsense/experiment.hpp"
#include "jcsense/fockspace.hpp"
#include "jcsense/metrology.hpp"
#include "jcsense/ramp.hpp"
#include "jcsense/serialize.hpp"
