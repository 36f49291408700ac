#pragma once

// Umbrella header for the simulation and verification library. The command
// line front end (sgdfclt/cli.hpp) is kept out because it needs Boost,
// CLI11 and OpenSSL.

#include "sgdfclt/asymptotics.hpp"
#include "sgdfclt/csv.hpp"
#include "sgdfclt/limit_diffusion.hpp"
#include "sgdfclt/limit_params.hpp"
#include "sgdfclt/linalg.hpp"
#include "sgdfclt/models.hpp"
#include "sgdfclt/parallel.hpp"
#include "sgdfclt/report.hpp"
#include "sgdfclt/rescaling.hpp"
#include "sgdfclt/rng.hpp"
#include "sgdfclt/sgd_engine.hpp"
#include "sgdfclt/stats.hpp"
#include "sgdfclt/verify.hpp"
