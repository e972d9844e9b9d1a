#pragma once

#include "deme/controllers.hpp"
#include "deme/csv.hpp"
#include "deme/decoration.hpp"
#include "deme/decoration_sources.hpp"
#include "deme/embedding.hpp"
#include "deme/error.hpp"
#include "deme/experiment_config.hpp"
#include "deme/generation.hpp"
#include "deme/hvac_sim.hpp"
#include "deme/method_path.hpp"
#include "deme/metrics.hpp"
#include "deme/prompt_eval.hpp"
#include "deme/svg.hpp"
