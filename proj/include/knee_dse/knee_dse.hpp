#pragma once

#include <knee_dse/cache.hpp>
#include <knee_dse/config.hpp>
#include <knee_dse/errors.hpp>
#include <knee_dse/lru_oracle.hpp>
#include <knee_dse/pipeline.hpp>
#include <knee_dse/report.hpp>
#include <knee_dse/sweep.hpp>
#include <knee_dse/timing.hpp>
#include <knee_dse/trace.hpp>
#include <knee_dse/tracegen.hpp>
