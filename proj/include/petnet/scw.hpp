#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "petnet/core.hpp"

namespace petnet {

/// Single-coincidence-window sorter settings.
struct ScwConfig {
  /// Events strictly closer than this many steps to the anchor share its
  /// window.
  std::uint32_t window = 3;
  /// Largest tolerated deviation of a pair's ring distance from C/2.
  std::uint32_t min_ring_separation = 2;
  bool geometry_filter = false;

  void validate(const DetectorConfig& detector) const;
};

struct ScwResult {
  std::vector<CoincidencePair> pairs;  // Type II
  std::uint64_t singles = 0;           // Type I
  std::uint64_t multiples = 0;         // Type III plus rejected pairs

  std::uint64_t accounted_events() const {
    return 2 * pairs.size() + singles + multiples;
  }

  ScwResult& operator+=(const ScwResult& other);
  bool operator==(const ScwResult&) const = default;
};

/// Scans the (time, crystal)-sorted hit list once. At each anchor, the window
/// holds the following hits with time difference < window:
///   none        -> the anchor is a single, advance by one;
///   exactly one -> a pair, advance past both (rejected as two multiples if it
///                  joins a crystal to itself or fails the geometry filter);
///   several     -> all are multiples, advance past the cluster.
/// Throws std::invalid_argument naming the first out-of-order index.
ScwResult scw_sort(std::span<const Event> events, const ScwConfig& cfg,
                   const DetectorConfig& detector);

/// Slow quadratic restatement of scw_sort for cross-checking.
ScwResult scw_reference(std::span<const Event> events, const ScwConfig& cfg,
                        const DetectorConfig& detector);

/// Each pair marks both crystals at the pair's (anchor) time.
SpikeTrain scw_to_label(const ScwResult& result, const DetectorConfig& config);

}  // namespace petnet
