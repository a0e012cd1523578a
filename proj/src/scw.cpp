#include "petnet/scw.hpp"

#include <algorithm>
#include <cstdlib>

namespace petnet {
namespace {

void check_input(std::span<const Event> events,
                 const DetectorConfig& detector) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].crystal >= detector.num_crystals()) {
      throw std::invalid_argument("event " + std::to_string(i) +
                                  " has crystal outside the detector");
    }
    if (i > 0 && !(events[i - 1] < events[i])) {
      throw std::invalid_argument(
          "events not sorted by (time, crystal) at index " + std::to_string(i));
    }
  }
}

bool accept_pair(const Event& a, const Event& b, const ScwConfig& cfg,
                 const DetectorConfig& detector) {
  if (a.crystal == b.crystal) return false;
  if (!cfg.geometry_filter) return true;
  const auto d = static_cast<std::int64_t>(
      detector.ring_distance(a.crystal, b.crystal));
  const auto deviation = std::llabs(d - detector.half_ring());
  return deviation <= static_cast<std::int64_t>(cfg.min_ring_separation);
}

CoincidencePair make_pair(const Event& anchor, const Event& partner) {
  return {anchor.time, std::min(anchor.crystal, partner.crystal),
          std::max(anchor.crystal, partner.crystal)};
}

}  // namespace

void ScwConfig::validate(const DetectorConfig& detector) const {
  if (window < 1) throw std::invalid_argument("SCW window must be >= 1");
  if (min_ring_separation >= detector.half_ring()) {
    throw std::invalid_argument("min ring separation must be below C/2");
  }
}

ScwResult& ScwResult::operator+=(const ScwResult& other) {
  pairs.insert(pairs.end(), other.pairs.begin(), other.pairs.end());
  singles += other.singles;
  multiples += other.multiples;
  return *this;
}

ScwResult scw_sort(std::span<const Event> events, const ScwConfig& cfg,
                   const DetectorConfig& detector) {
  cfg.validate(detector);
  check_input(events, detector);

  ScwResult result;
  const std::size_t n = events.size();
  std::size_t i = 0;
  while (i < n) {
    const std::uint32_t anchor_time = events[i].time;
    std::size_t end = i + 1;
    while (end < n && events[end].time - anchor_time < cfg.window) ++end;

    const std::size_t in_window = end - i - 1;
    if (in_window == 0) {
      ++result.singles;
    } else if (in_window == 1) {
      if (accept_pair(events[i], events[i + 1], cfg, detector)) {
        result.pairs.push_back(make_pair(events[i], events[i + 1]));
      } else {
        result.multiples += 2;
      }
    } else {
      result.multiples += in_window + 1;
    }
    i = end;
  }
  return result;
}

ScwResult scw_reference(std::span<const Event> events, const ScwConfig& cfg,
                        const DetectorConfig& detector) {
  cfg.validate(detector);
  check_input(events, detector);

  ScwResult result;
  const std::size_t n = events.size();
  std::vector<bool> consumed(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (consumed[i]) continue;
    std::vector<std::size_t> window;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || consumed[j]) continue;
      const auto dt = static_cast<std::int64_t>(events[j].time) -
                      static_cast<std::int64_t>(events[i].time);
      const bool after = j > i;
      if (after && dt >= 0 && dt < static_cast<std::int64_t>(cfg.window)) {
        window.push_back(j);
      }
    }
    consumed[i] = true;
    for (auto j : window) consumed[j] = true;

    if (window.empty()) {
      result.singles += 1;
    } else if (window.size() == 1) {
      const Event& a = events[i];
      const Event& b = events[window.front()];
      bool ok = a.crystal != b.crystal;
      if (ok && cfg.geometry_filter) {
        const long long raw = std::llabs(static_cast<long long>(a.crystal) -
                                         static_cast<long long>(b.crystal));
        const long long ring =
            std::min<long long>(raw, detector.num_crystals() - raw);
        const long long half = detector.num_crystals() / 2;
        ok = std::llabs(ring - half) <=
             static_cast<long long>(cfg.min_ring_separation);
      }
      if (ok) {
        result.pairs.push_back({a.time, std::min(a.crystal, b.crystal),
                                std::max(a.crystal, b.crystal)});
      } else {
        result.multiples += 2;
      }
    } else {
      result.multiples += window.size() + 1;
    }
  }
  return result;
}

SpikeTrain scw_to_label(const ScwResult& result, const DetectorConfig& config) {
  std::vector<Event> events;
  events.reserve(2 * result.pairs.size());
  for (const auto& p : result.pairs) {
    events.push_back({p.time, p.crystal_a});
    events.push_back({p.time, p.crystal_b});
  }
  return SpikeTrain::from_unsorted(config, std::move(events));
}

}  // namespace petnet
