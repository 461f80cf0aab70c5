#pragma once

#include "fedmc/checkpoint.hpp"
#include "fedmc/config.hpp"
#include "fedmc/dataset.hpp"
#include "fedmc/diagnostics.hpp"
#include "fedmc/errors.hpp"
#include "fedmc/fedmavg.hpp"
#include "fedmc/fedmc_admm.hpp"
#include "fedmc/harness.hpp"
#include "fedmc/kernels.hpp"
#include "fedmc/masked_matrix.hpp"
#include "fedmc/rng.hpp"
#include "fedmc/sampling.hpp"
#include "fedmc/synthetic.hpp"
