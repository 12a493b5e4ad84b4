#pragma once

#include "community.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "fusion/fit.hpp"
#include "fusion/loss.hpp"
#include "fusion/reparam.hpp"
#include "graph.hpp"
#include "ingest.hpp"
#include "io.hpp"
#include "netstats.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "simstats.hpp"
#include "synth.hpp"
