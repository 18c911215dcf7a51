#ifndef VALOR_VALOR_HPP
#define VALOR_VALOR_HPP

// Umbrella header.

#include "valor/analytic.hpp"
#include "valor/channel.hpp"
#include "valor/config.hpp"
#include "valor/estimators.hpp"
#include "valor/figures.hpp"
#include "valor/metrics.hpp"
#include "valor/parallel.hpp"
#include "valor/particle.hpp"
#include "valor/random.hpp"
#include "valor/report.hpp"
#include "valor/signal.hpp"
#include "valor/signal_io.hpp"
#include "valor/simulator.hpp"
#include "valor/sweep.hpp"
#include "valor/units.hpp"

#endif  // VALOR_VALOR_HPP
