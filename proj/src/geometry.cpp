#include "petnet/geometry.hpp"

#include <vector>

namespace petnet {

void GeometryConfig::validate(const DetectorConfig& detector) const {
  if (4 * static_cast<std::uint64_t>(window_half_width) >=
      detector.num_crystals()) {
    throw std::invalid_argument("geometry window half-width " +
                                std::to_string(window_half_width) +
                                " must be below C/4");
  }
}

SpikeTrain geometry_features(const SpikeTrain& hits, std::uint32_t w) {
  const DetectorConfig det(hits.shape().channels, hits.shape().timesteps);
  GeometryConfig{w}.validate(det);

  // A hit at crystal h lights every c with h = c + i + C/2 (mod C), i.e.
  // c = h - C/2 - i for i in [-w, w].
  std::vector<Event> out;
  out.reserve(hits.size() * (2 * w + 1));
  const auto iw = static_cast<std::int64_t>(w);
  for (const auto& e : hits.events()) {
    const std::int64_t base =
        static_cast<std::int64_t>(e.crystal) - det.half_ring();
    for (std::int64_t i = -iw; i <= iw; ++i) {
      out.push_back({e.time, det.wrap(base - i)});
    }
  }
  return SpikeTrain::from_unsorted(det, std::move(out));
}

SpikeTrain augment(const SpikeTrain& hits, std::uint32_t w) {
  const std::uint32_t c = hits.shape().channels;
  const SpikeTrain g = geometry_features(hits, w);
  std::vector<Event> out(hits.events().begin(), hits.events().end());
  out.reserve(hits.size() + g.size());
  for (const auto& e : g.events()) out.push_back({e.time, e.crystal + c});
  return SpikeTrain::from_unsorted(GridShape(2 * c, hits.shape().timesteps),
                                   std::move(out));
}

}  // namespace petnet
