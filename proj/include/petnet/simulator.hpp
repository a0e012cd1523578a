#pragma once

#include <cstdint>
#include <vector>

#include "petnet/core.hpp"
#include "petnet/io.hpp"

namespace petnet {

/// Monte Carlo decay generator. A decay emits two photons toward roughly
/// opposite crystals at one time step; each photon is detected independently.
struct SimulatorConfig {
  DetectorConfig detector{240, 2000};
  std::uint32_t events_per_sample = 40;
  double detection_probability = 0.8;
  std::uint32_t max_shift = 2;
  std::uint64_t rng_seed = 0;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;

  /// C=240, T=2000, 40 decays per train. Decay count is a tunable default.
  static SimulatorConfig clinical();
  /// C=2880, T=2000, 400 decays per train. Decay count is a tunable default.
  static SimulatorConfig safir();
};

/// Per-sample tallies, reported alongside generation for statistics tests.
struct DecayTally {
  std::uint64_t decays = 0;
  std::uint64_t both_detected = 0;
  std::uint64_t one_detected = 0;
  std::uint64_t none_detected = 0;

  DecayTally& operator+=(const DecayTally& other);
};

/// Deterministic in (cfg.rng_seed, stream_index).
Sample generate_sample(const SimulatorConfig& cfg, std::uint64_t stream_index,
                       DecayTally* tally = nullptr);

struct GeneratedDataset {
  std::vector<Sample> samples;
  DatasetManifest manifest;
  DecayTally tally;
};

/// Samples use stream indices 0..num_samples-1; output order is index order
/// regardless of `threads`.
GeneratedDataset generate_dataset(const SimulatorConfig& cfg,
                                  std::uint64_t num_samples,
                                  unsigned threads = 1);

}  // namespace petnet
