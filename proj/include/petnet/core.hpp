#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace petnet {

/// Ring scanner discretization. Crystal c faces crystal (c + C/2) mod C.
class DetectorConfig {
 public:
  DetectorConfig(std::uint32_t num_crystals, std::uint32_t num_timesteps);

  std::uint32_t num_crystals() const { return num_crystals_; }
  std::uint32_t num_timesteps() const { return num_timesteps_; }
  std::uint32_t half_ring() const { return num_crystals_ / 2; }

  /// Crystal directly across the ring from `crystal`.
  std::uint32_t opposite(std::uint32_t crystal) const;

  /// min(|a-b|, C-|a-b|).
  std::uint32_t ring_distance(std::uint32_t a, std::uint32_t b) const;

  /// Crystal reached by stepping `offset` positions around the ring.
  std::uint32_t wrap(std::int64_t crystal) const;

  bool operator==(const DetectorConfig&) const = default;

 private:
  std::uint32_t num_crystals_;
  std::uint32_t num_timesteps_;
};

/// Channel x time-step extent of a spike grid. A detector's grid has one
/// channel per crystal; geometry-augmented inputs have two.
struct GridShape {
  std::uint32_t channels = 0;
  std::uint32_t timesteps = 0;

  GridShape(std::uint32_t channels, std::uint32_t timesteps);
  GridShape(const DetectorConfig& config);  // NOLINT: implicit by intent

  bool operator==(const GridShape&) const = default;
};

struct Event {
  std::uint32_t time = 0;
  std::uint32_t crystal = 0;

  // Canonical order: time first, crystal breaks ties.
  auto operator<=>(const Event&) const = default;
};

/// Binary channels x T spike matrix stored as its sorted, duplicate-free
/// event list. `Event::crystal` is the channel index.
class SpikeTrain {
 public:
  explicit SpikeTrain(GridShape shape);

  /// Validates bounds, sortedness and uniqueness.
  SpikeTrain(GridShape shape, std::vector<Event> events);

  /// Sorts and merges duplicates; still rejects out-of-bounds events.
  static SpikeTrain from_unsorted(GridShape shape, std::vector<Event> events);

  const GridShape& shape() const { return shape_; }
  std::span<const Event> events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  bool contains(Event e) const;

  /// Sorted spike times of one crystal.
  std::vector<std::uint32_t> crystal_times(std::uint32_t crystal) const;

  /// Spike times for every crystal, indexed by crystal.
  std::vector<std::vector<std::uint32_t>> times_by_crystal() const;

  bool operator==(const SpikeTrain&) const = default;

 private:
  GridShape shape_;
  std::vector<Event> events_;
};

struct Sample {
  SpikeTrain input;
  SpikeTrain label;
};

/// Throws if input and label disagree on shape or label is not a subset of
/// input.
void validate_sample(const Sample& sample);

struct CoincidencePair {
  std::uint32_t time = 0;
  std::uint32_t crystal_a = 0;
  std::uint32_t crystal_b = 0;

  bool operator==(const CoincidencePair&) const = default;
};

/// Rows are crystals, columns are time steps.
using DenseTrain = Eigen::MatrixXd;

DenseTrain to_dense(const SpikeTrain& train);

/// Throws std::invalid_argument("non-binary value ...") on entries outside
/// {0, 1}.
SpikeTrain from_dense(const DenseTrain& matrix);

/// Like from_dense, but interprets any entry > 0.5 as a spike. Used on soft
/// network outputs.
SpikeTrain threshold_dense(const DenseTrain& matrix);

}  // namespace petnet
