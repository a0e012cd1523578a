#include "petnet/core.hpp"

#include <algorithm>
#include <sstream>

namespace petnet {

DetectorConfig::DetectorConfig(std::uint32_t num_crystals,
                               std::uint32_t num_timesteps)
    : num_crystals_(num_crystals), num_timesteps_(num_timesteps) {
  if (num_crystals % 2 != 0) {
    throw std::invalid_argument("crystal count must be even, got " +
                                std::to_string(num_crystals));
  }
  if (num_crystals < 4) {
    throw std::invalid_argument("crystal count must be at least 4, got " +
                                std::to_string(num_crystals));
  }
  if (num_timesteps < 1) {
    throw std::invalid_argument("time step count must be positive");
  }
}

std::uint32_t DetectorConfig::opposite(std::uint32_t crystal) const {
  return (crystal + half_ring()) % num_crystals_;
}

std::uint32_t DetectorConfig::ring_distance(std::uint32_t a,
                                            std::uint32_t b) const {
  const std::uint32_t d = a > b ? a - b : b - a;
  return std::min(d, num_crystals_ - d);
}

std::uint32_t DetectorConfig::wrap(std::int64_t crystal) const {
  const auto n = static_cast<std::int64_t>(num_crystals_);
  return static_cast<std::uint32_t>(((crystal % n) + n) % n);
}

GridShape::GridShape(std::uint32_t channels, std::uint32_t timesteps)
    : channels(channels), timesteps(timesteps) {
  if (channels < 1 || timesteps < 1) {
    throw std::invalid_argument("grid dimensions must be positive");
  }
}

GridShape::GridShape(const DetectorConfig& config)
    : channels(config.num_crystals()), timesteps(config.num_timesteps()) {}

namespace {

void check_bounds(const GridShape& shape, const Event& e) {
  if (e.crystal >= shape.channels || e.time >= shape.timesteps) {
    std::ostringstream msg;
    msg << "event (crystal " << e.crystal << ", time " << e.time
        << ") outside " << shape.channels << "x" << shape.timesteps
        << " grid";
    throw std::out_of_range(msg.str());
  }
}

}  // namespace

SpikeTrain::SpikeTrain(GridShape shape) : shape_(shape) {}

SpikeTrain::SpikeTrain(GridShape shape, std::vector<Event> events)
    : shape_(shape), events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    check_bounds(shape_, events_[i]);
    if (i > 0 && !(events_[i - 1] < events_[i])) {
      throw std::invalid_argument(
          "events must be strictly sorted by (time, crystal); violated at "
          "index " +
          std::to_string(i));
    }
  }
}

SpikeTrain SpikeTrain::from_unsorted(GridShape shape,
                                     std::vector<Event> events) {
  for (const auto& e : events) check_bounds(shape, e);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());
  SpikeTrain train(shape);
  train.events_ = std::move(events);
  return train;
}

bool SpikeTrain::contains(Event e) const {
  return std::binary_search(events_.begin(), events_.end(), e);
}

std::vector<std::uint32_t> SpikeTrain::crystal_times(
    std::uint32_t crystal) const {
  std::vector<std::uint32_t> times;
  for (const auto& e : events_) {
    if (e.crystal == crystal) times.push_back(e.time);
  }
  return times;
}

std::vector<std::vector<std::uint32_t>> SpikeTrain::times_by_crystal() const {
  std::vector<std::vector<std::uint32_t>> rows(shape_.channels);
  for (const auto& e : events_) rows[e.crystal].push_back(e.time);
  return rows;
}

void validate_sample(const Sample& sample) {
  if (!(sample.input.shape() == sample.label.shape())) {
    throw std::invalid_argument("input and label grid shapes differ");
  }
  for (const auto& e : sample.label.events()) {
    if (!sample.input.contains(e)) {
      throw std::invalid_argument(
          "label event (crystal " + std::to_string(e.crystal) + ", time " +
          std::to_string(e.time) + ") missing from input");
    }
  }
}

DenseTrain to_dense(const SpikeTrain& train) {
  DenseTrain m =
      DenseTrain::Zero(train.shape().channels, train.shape().timesteps);
  for (const auto& e : train.events()) m(e.crystal, e.time) = 1.0;
  return m;
}

SpikeTrain from_dense(const DenseTrain& matrix) {
  GridShape shape(static_cast<std::uint32_t>(matrix.rows()),
                  static_cast<std::uint32_t>(matrix.cols()));
  std::vector<Event> events;
  for (Eigen::Index t = 0; t < matrix.cols(); ++t) {
    for (Eigen::Index c = 0; c < matrix.rows(); ++c) {
      const double v = matrix(c, t);
      if (v == 1.0) {
        events.push_back({static_cast<std::uint32_t>(t),
                          static_cast<std::uint32_t>(c)});
      } else if (v != 0.0) {
        std::ostringstream msg;
        msg << "non-binary value " << v << " at (" << c << ", " << t << ")";
        throw std::invalid_argument(msg.str());
      }
    }
  }
  return SpikeTrain(shape, std::move(events));
}

SpikeTrain threshold_dense(const DenseTrain& matrix) {
  GridShape shape(static_cast<std::uint32_t>(matrix.rows()),
                  static_cast<std::uint32_t>(matrix.cols()));
  std::vector<Event> events;
  for (Eigen::Index t = 0; t < matrix.cols(); ++t) {
    for (Eigen::Index c = 0; c < matrix.rows(); ++c) {
      if (matrix(c, t) > 0.5) {
        events.push_back({static_cast<std::uint32_t>(t),
                          static_cast<std::uint32_t>(c)});
      }
    }
  }
  return SpikeTrain(shape, std::move(events));
}

}  // namespace petnet
