#pragma once

#include "orthoev/error.hpp"
#include "orthoev/evd.hpp"
#include "orthoev/priors.hpp"
#include "orthoev/chains.hpp"
#include "orthoev/rng.hpp"
#include "orthoev/model.hpp"
#include "orthoev/optimize.hpp"
#include "orthoev/simgen.hpp"
#include "orthoev/sampler.hpp"
#include "orthoev/diagnostics.hpp"
#include "orthoev/analysis.hpp"
#include "orthoev/ingest.hpp"
#include "orthoev/io.hpp"
#include "orthoev/svg.hpp"
#include "orthoev/config.hpp"
