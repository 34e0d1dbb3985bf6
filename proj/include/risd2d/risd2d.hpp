#pragma once

#include "risd2d/random.hpp"
#include "risd2d/channel.hpp"
#include "risd2d/config.hpp"
#include "risd2d/environment.hpp"
#include "risd2d/neural.hpp"
#include "risd2d/agents.hpp"
#include "risd2d/baselines.hpp"
#include "risd2d/harness.hpp"
