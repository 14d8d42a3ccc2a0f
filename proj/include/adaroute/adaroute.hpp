// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "adaroute/adapter_io.hpp"
#include "adaroute/catalog.hpp"
#include "adaroute/clustering.hpp"
#include "adaroute/decision.hpp"
#include "adaroute/encoder.hpp"
#include "adaroute/error.hpp"
#include "adaroute/evaluator.hpp"
#include "adaroute/fusion.hpp"
#include "adaroute/harness.hpp"
#include "adaroute/linalg.hpp"
#include "adaroute/metrics.hpp"
#include "adaroute/pairing.hpp"
#include "adaroute/retrieval.hpp"
#include "adaroute/world.hpp"
