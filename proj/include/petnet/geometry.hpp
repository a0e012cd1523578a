#pragma once

#include <cstdint>

#include "petnet/core.hpp"

namespace petnet {

/// Half-width of the window of crystals around the ring-opposite position.
struct GeometryConfig {
  std::uint32_t window_half_width = 2;

  void validate(const DetectorConfig& detector) const;
};

/// G[c][t] = 1 iff some crystal within `w` of c's opposite has a hit at t.
/// `hits` must span a detector ring (even channel count >= 4).
SpikeTrain geometry_features(const SpikeTrain& hits, std::uint32_t w);

/// Stacks hits (channels [0, C)) on top of their geometry features
/// (channels [C, 2C)).
SpikeTrain augment(const SpikeTrain& hits, std::uint32_t w);

}  // namespace petnet
