#ifndef SPLINK_SPLINK_HPP
#define SPLINK_SPLINK_HPP

#include "splink/analysis.hpp"
#include "splink/catalog.hpp"
#include "splink/constants.hpp"
#include "splink/ephemeris.hpp"
#include "splink/link_budget.hpp"
#include "splink/rng.hpp"
#include "splink/timetag.hpp"
#include "splink/timetag_sim.hpp"

#endif
