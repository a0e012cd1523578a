#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "petnet/core.hpp"

namespace petnet {

inline constexpr std::uint32_t kDefaultTolerance = 40;

struct MatchReport {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  /// Ratios are 0 when their denominator is 0.
  static MatchReport from_counts(std::uint64_t tp, std::uint64_t fp,
                                 std::uint64_t fn);

  /// Sums counts and recomputes the ratios (micro-average).
  MatchReport& operator+=(const MatchReport& other);
  bool operator==(const MatchReport&) const = default;
};

/// One-to-one matching within each crystal, |s - y| <= tolerance, greedy in
/// time order. Greedy is optimal here: each label's matchable predictions
/// form an interval and the intervals are ordered like the labels.
MatchReport match_spikes(const SpikeTrain& pred, const SpikeTrain& label,
                         std::uint32_t tolerance);

/// Exhaustive maximum bipartite matching. Throws std::length_error if any
/// crystal carries more than 10 spikes in either train.
MatchReport match_spikes_reference(const SpikeTrain& pred,
                                   const SpikeTrain& label,
                                   std::uint32_t tolerance);

/// Per-label-event flag (in label event order): matched by match_spikes.
std::vector<bool> matched_labels(const SpikeTrain& pred,
                                 const SpikeTrain& label,
                                 std::uint32_t tolerance);

struct DatasetEvaluation {
  MatchReport total;
  std::vector<MatchReport> per_sample;
};

DatasetEvaluation evaluate_dataset(std::span<const SpikeTrain> predictions,
                                   std::span<const Sample> samples,
                                   std::uint32_t tolerance,
                                   unsigned threads = 1);

/// Line-of-response diagnostic, not a spike-level metric: label events at one
/// time step are paired (each with the free crystal closest to its ring
/// opposite); a pair is detected when both of its spikes are matched.
struct PairReport {
  std::uint64_t label_pairs = 0;
  std::uint64_t detected_pairs = 0;
  double recall() const {
    return label_pairs == 0 ? 0.0
                            : static_cast<double>(detected_pairs) /
                                  static_cast<double>(label_pairs);
  }
  PairReport& operator+=(const PairReport& other);
};

std::vector<std::pair<Event, Event>> label_pairs(const SpikeTrain& label);

PairReport pair_report(const SpikeTrain& pred, const SpikeTrain& label,
                       std::uint32_t tolerance);

/// "tp fp fn precision recall f1" as one space-separated line.
std::string format_record(const MatchReport& report);

/// Aligned table with a header row and one row per named report.
std::string format_table(
    std::span<const std::pair<std::string, MatchReport>> rows);

}  // namespace petnet
