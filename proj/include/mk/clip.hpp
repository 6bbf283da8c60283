// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mk/tensor.hpp"

namespace mk {

// Pixel-space frame stack, (N, C, H, W), values in [0, 1].
struct VideoClip {
  Tensor<double> frames;

  std::size_t frame_count() const { return frames.extent(0); }
  Tensor<double> frame(std::size_t i) const { return mk::frame(frames, i); }

  void validate() const {
    if (frames.rank() != 4) throw ShapeError("VideoClip must be (N, C, H, W), got " + shape_string(frames.shape()));
  }
};

// Latent-space frame stack, (N, c, h, w). Frame 0 is the conditioning image.
struct LatentClip {
  Tensor<double> frames;

  std::size_t frame_count() const { return frames.extent(0); }
  Tensor<double> frame(std::size_t i) const { return mk::frame(frames, i); }

  void validate() const {
    if (frames.rank() != 4) throw ShapeError("LatentClip must be (N, c, h, w), got " + shape_string(frames.shape()));
  }
};

}  // namespace mk
