#pragma once

#include "pagescope/error.hpp"
#include "pagescope/events.hpp"
#include "pagescope/counters.hpp"
#include "pagescope/metrics.hpp"
#include "pagescope/hugepages.hpp"
#include "pagescope/blockmesh.hpp"
#include "pagescope/tlbsim.hpp"
#include "pagescope/config.hpp"
#include "pagescope/experiment.hpp"
#include "pagescope/render.hpp"
#include "pagescope/doctor.hpp"
