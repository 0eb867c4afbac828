#pragma once

#include "allee/error.hpp"
#include "allee/schedule.hpp"
#include "allee/exact.hpp"
#include "allee/integrators.hpp"
#include "allee/tipping.hpp"
#include "allee/studies.hpp"
#include "allee/calibrate.hpp"
#include "allee/io.hpp"
#include "allee/config.hpp"
