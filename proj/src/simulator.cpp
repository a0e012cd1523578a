#include "petnet/simulator.hpp"

#include "petnet/parallel.hpp"
#include "petnet/random.hpp"

namespace petnet {

void SimulatorConfig::validate() const {
  if (events_per_sample < 1) {
    throw std::invalid_argument("events per sample must be positive");
  }
  if (!(detection_probability > 0.0 && detection_probability <= 1.0)) {
    throw std::invalid_argument("detection probability must be in (0, 1]");
  }
  if (4 * static_cast<std::uint64_t>(max_shift) >= detector.num_crystals()) {
    throw std::invalid_argument("max shift " + std::to_string(max_shift) +
                                " must be below a quarter ring (C/4)");
  }
}

SimulatorConfig SimulatorConfig::clinical() {
  SimulatorConfig cfg;
  cfg.detector = DetectorConfig(240, 2000);
  cfg.events_per_sample = 40;
  return cfg;
}

SimulatorConfig SimulatorConfig::safir() {
  SimulatorConfig cfg;
  cfg.detector = DetectorConfig(2880, 2000);
  cfg.events_per_sample = 400;
  return cfg;
}

DecayTally& DecayTally::operator+=(const DecayTally& other) {
  decays += other.decays;
  both_detected += other.both_detected;
  one_detected += other.one_detected;
  none_detected += other.none_detected;
  return *this;
}

Sample generate_sample(const SimulatorConfig& cfg, std::uint64_t stream_index,
                       DecayTally* tally) {
  cfg.validate();
  const DetectorConfig& det = cfg.detector;
  Rng rng(cfg.rng_seed, stream_index);

  std::vector<Event> hits;
  std::vector<Event> coincidences;
  DecayTally local;
  const auto shift = static_cast<std::int64_t>(cfg.max_shift);
  for (std::uint32_t k = 0; k < cfg.events_per_sample; ++k) {
    const auto t = static_cast<std::uint32_t>(rng.below(det.num_timesteps()));
    const auto c1 = static_cast<std::uint32_t>(rng.below(det.num_crystals()));
    const std::int64_t s = rng.between(-shift, shift);
    const std::uint32_t c2 =
        det.wrap(static_cast<std::int64_t>(c1) + det.half_ring() + s);
    const bool fire1 = rng.bernoulli(cfg.detection_probability);
    const bool fire2 = rng.bernoulli(cfg.detection_probability);

    ++local.decays;
    if (fire1) hits.push_back({t, c1});
    if (fire2) hits.push_back({t, c2});
    if (fire1 && fire2) {
      coincidences.push_back({t, c1});
      coincidences.push_back({t, c2});
      ++local.both_detected;
    } else if (fire1 || fire2) {
      ++local.one_detected;
    } else {
      ++local.none_detected;
    }
  }
  if (tally) *tally += local;
  return {SpikeTrain::from_unsorted(det, std::move(hits)),
          SpikeTrain::from_unsorted(det, std::move(coincidences))};
}

GeneratedDataset generate_dataset(const SimulatorConfig& cfg,
                                  std::uint64_t num_samples, unsigned threads) {
  cfg.validate();
  if (num_samples < 1) {
    throw std::invalid_argument("sample count must be at least 1");
  }
  std::vector<Sample> samples(num_samples, Sample{SpikeTrain(cfg.detector),
                                                  SpikeTrain(cfg.detector)});
  std::vector<DecayTally> tallies(num_samples);
  parallel_for(num_samples, threads, [&](std::size_t i) {
    samples[i] = generate_sample(cfg, i, &tallies[i]);
  });

  GeneratedDataset out{std::move(samples), {}, {}};
  for (const auto& t : tallies) out.tally += t;
  out.manifest.config = cfg.detector;
  out.manifest.num_samples = num_samples;
  out.manifest.rng_seed = cfg.rng_seed;
  return out;
}

}  // namespace petnet
