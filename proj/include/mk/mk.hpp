// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

// Everything in one include.
#pragma once

#include "mk/attention.hpp"
#include "mk/autodiff.hpp"
#include "mk/bench.hpp"
#include "mk/checkpoint.hpp"
#include "mk/clip.hpp"
#include "mk/denoiser.hpp"
#include "mk/dynamics.hpp"
#include "mk/error.hpp"
#include "mk/flowmatch.hpp"
#include "mk/motion.hpp"
#include "mk/rng.hpp"
#include "mk/spectral.hpp"
#include "mk/synth.hpp"
#include "mk/tensor.hpp"
#include "mk/tensor_io.hpp"
