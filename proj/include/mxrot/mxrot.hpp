// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mxrot/analysis.hpp"
#include "mxrot/error.hpp"
#include "mxrot/fp4.hpp"
#include "mxrot/generate.hpp"
#include "mxrot/int_quant.hpp"
#include "mxrot/linalg.hpp"
#include "mxrot/mx_tensor.hpp"
#include "mxrot/permutation.hpp"
#include "mxrot/pipeline.hpp"
#include "mxrot/rng.hpp"
#include "mxrot/rotation.hpp"
#include "mxrot/serialize.hpp"
#include "mxrot/smooth.hpp"
#include "mxrot/tensor.hpp"
#include "mxrot/tensor_io.hpp"
