#pragma once

#include "sparseflex/common.hpp"
#include "sparseflex/formats.hpp"
#include "sparseflex/hardware.hpp"
#include "sparseflex/mcf_cost.hpp"
#include "sparseflex/profile.hpp"
#include "sparseflex/mint.hpp"
#include "sparseflex/kernels.hpp"
#include "sparseflex/acf_perf.hpp"
#include "sparseflex/generate.hpp"
#include "sparseflex/sage.hpp"
#include "sparseflex/io.hpp"
