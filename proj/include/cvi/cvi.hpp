#pragma once

#include "cvi/algo_config.hpp"
#include "cvi/covariance.hpp"
#include "cvi/envs.hpp"
#include "cvi/errors.hpp"
#include "cvi/harness.hpp"
#include "cvi/linear_agent.hpp"
#include "cvi/mdp.hpp"
#include "cvi/oracle.hpp"
#include "cvi/rng.hpp"
#include "cvi/run_record.hpp"
#include "cvi/tabular_agent.hpp"
#include "cvi/text_format.hpp"
