#pragma once

#include "ddlab/core.hpp"
#include "ddlab/rng.hpp"
#include "ddlab/parallel.hpp"
#include "ddlab/spin.hpp"
#include "ddlab/sequence.hpp"
#include "ddlab/compile.hpp"
#include "ddlab/library.hpp"
#include "ddlab/aht.hpp"
#include "ddlab/policy.hpp"
#include "ddlab/evolution.hpp"
#include "ddlab/config.hpp"
#include "ddlab/harness.hpp"
