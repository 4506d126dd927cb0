// Copyright (C) 2026 The tokensieve Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tokensieve/error.hpp"
#include "tokensieve/eval.hpp"
#include "tokensieve/metric.hpp"
#include "tokensieve/profile_config.hpp"
#include "tokensieve/roofline.hpp"
#include "tokensieve/selection.hpp"
#include "tokensieve/similarity.hpp"
#include "tokensieve/tensor_io.hpp"
#include "tokensieve/token_matrix.hpp"
#include "tokensieve/version.hpp"
