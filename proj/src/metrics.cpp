#include "petnet/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "petnet/parallel.hpp"

namespace petnet {
namespace {

void check_shapes(const SpikeTrain& pred, const SpikeTrain& label) {
  if (!(pred.shape() == label.shape())) {
    throw std::invalid_argument(
        "prediction and label use different detector configs");
  }
}

bool within(std::uint32_t a, std::uint32_t b, std::uint32_t tolerance) {
  return (a > b ? a - b : b - a) <= tolerance;
}

// Greedy matching of one crystal. Returns matched flags for `labels`.
std::vector<bool> greedy_crystal(const std::vector<std::uint32_t>& preds,
                                 const std::vector<std::uint32_t>& labels,
                                 std::uint32_t tolerance) {
  std::vector<bool> matched(labels.size(), false);
  std::size_t i = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const std::uint32_t y = labels[k];
    while (i < preds.size() && preds[i] + tolerance < y) ++i;
    if (i < preds.size() && within(preds[i], y, tolerance)) {
      matched[k] = true;
      ++i;
    }
  }
  return matched;
}

}  // namespace

MatchReport MatchReport::from_counts(std::uint64_t tp, std::uint64_t fp,
                                     std::uint64_t fn) {
  MatchReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  const auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  const double s = r.precision + r.recall;
  r.f1 = s == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / s;
  return r;
}

MatchReport& MatchReport::operator+=(const MatchReport& other) {
  *this = from_counts(tp + other.tp, fp + other.fp, fn + other.fn);
  return *this;
}

std::vector<bool> matched_labels(const SpikeTrain& pred,
                                 const SpikeTrain& label,
                                 std::uint32_t tolerance) {
  check_shapes(pred, label);
  const auto ps = pred.times_by_crystal();
  const auto ys = label.times_by_crystal();
  std::vector<std::vector<bool>> per_crystal(ps.size());
  for (std::size_t c = 0; c < ps.size(); ++c) {
    per_crystal[c] = greedy_crystal(ps[c], ys[c], tolerance);
  }
  // Label events are (time, crystal) ordered, and within a crystal that is
  // time order, so a per-crystal cursor walks each flag list once.
  std::vector<std::size_t> cursor(ps.size(), 0);
  std::vector<bool> flags;
  flags.reserve(label.size());
  for (const auto& e : label.events()) {
    flags.push_back(per_crystal[e.crystal][cursor[e.crystal]++]);
  }
  return flags;
}

MatchReport match_spikes(const SpikeTrain& pred, const SpikeTrain& label,
                         std::uint32_t tolerance) {
  check_shapes(pred, label);
  const auto ps = pred.times_by_crystal();
  const auto ys = label.times_by_crystal();
  std::uint64_t tp = 0;
  for (std::size_t c = 0; c < ps.size(); ++c) {
    const auto m = greedy_crystal(ps[c], ys[c], tolerance);
    tp += static_cast<std::uint64_t>(std::count(m.begin(), m.end(), true));
  }
  return MatchReport::from_counts(tp, pred.size() - tp, label.size() - tp);
}

MatchReport match_spikes_reference(const SpikeTrain& pred,
                                   const SpikeTrain& label,
                                   std::uint32_t tolerance) {
  check_shapes(pred, label);
  constexpr std::size_t kMaxSpikes = 10;
  const auto ps = pred.times_by_crystal();
  const auto ys = label.times_by_crystal();
  std::uint64_t tp = 0;
  for (std::size_t c = 0; c < ps.size(); ++c) {
    const auto& p = ps[c];
    const auto& y = ys[c];
    if (p.size() > kMaxSpikes || y.size() > kMaxSpikes) {
      throw std::length_error("reference matcher supports at most 10 spikes "
                              "per crystal");
    }
    // best[i][mask]: max matches of labels i.. given used predictions `mask`.
    const std::size_t masks = std::size_t{1} << p.size();
    std::vector<std::vector<int>> best(y.size() + 1,
                                       std::vector<int>(masks, 0));
    for (std::size_t i = y.size(); i-- > 0;) {
      for (std::size_t mask = 0; mask < masks; ++mask) {
        int value = best[i + 1][mask];
        for (std::size_t j = 0; j < p.size(); ++j) {
          if ((mask >> j) & 1u) continue;
          if (!within(p[j], y[i], tolerance)) continue;
          value = std::max(value, 1 + best[i + 1][mask | (std::size_t{1} << j)]);
        }
        best[i][mask] = value;
      }
    }
    tp += static_cast<std::uint64_t>(best[0][0]);
  }
  return MatchReport::from_counts(tp, pred.size() - tp, label.size() - tp);
}

DatasetEvaluation evaluate_dataset(std::span<const SpikeTrain> predictions,
                                   std::span<const Sample> samples,
                                   std::uint32_t tolerance, unsigned threads) {
  if (predictions.size() != samples.size()) {
    throw std::invalid_argument(
        "prediction count " + std::to_string(predictions.size()) +
        " does not match sample count " + std::to_string(samples.size()));
  }
  DatasetEvaluation out;
  out.per_sample.resize(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    out.per_sample[i] = match_spikes(predictions[i], samples[i].label, tolerance);
  });
  for (const auto& r : out.per_sample) out.total += r;
  return out;
}

PairReport& PairReport::operator+=(const PairReport& other) {
  label_pairs += other.label_pairs;
  detected_pairs += other.detected_pairs;
  return *this;
}

std::vector<std::pair<Event, Event>> label_pairs(const SpikeTrain& label) {
  const GridShape shape = label.shape();
  const std::uint32_t half = shape.channels / 2;
  std::vector<std::pair<Event, Event>> pairs;
  const auto events = label.events();
  std::size_t begin = 0;
  while (begin < events.size()) {
    std::size_t end = begin;
    while (end < events.size() && events[end].time == events[begin].time) ++end;
    std::vector<bool> used(end - begin, false);
    for (std::size_t i = begin; i < end; ++i) {
      if (used[i - begin]) continue;
      std::size_t best = end;
      std::uint32_t best_dev = 0;
      for (std::size_t j = i + 1; j < end; ++j) {
        if (used[j - begin]) continue;
        const std::uint32_t raw = events[j].crystal - events[i].crystal;
        const std::uint32_t ring = std::min(raw, shape.channels - raw);
        const std::uint32_t dev = half - ring;
        if (best == end || dev < best_dev) {
          best = j;
          best_dev = dev;
        }
      }
      if (best == end) break;
      used[i - begin] = used[best - begin] = true;
      pairs.emplace_back(events[i], events[best]);
    }
    begin = end;
  }
  return pairs;
}

PairReport pair_report(const SpikeTrain& pred, const SpikeTrain& label,
                       std::uint32_t tolerance) {
  const auto flags = matched_labels(pred, label, tolerance);
  std::map<Event, bool> matched;
  const auto events = label.events();
  for (std::size_t i = 0; i < events.size(); ++i) matched[events[i]] = flags[i];
  PairReport report;
  for (const auto& [a, b] : label_pairs(label)) {
    ++report.label_pairs;
    if (matched[a] && matched[b]) ++report.detected_pairs;
  }
  return report;
}

std::string format_record(const MatchReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%llu %llu %llu %.6f %.6f %.6f",
                static_cast<unsigned long long>(r.tp),
                static_cast<unsigned long long>(r.fp),
                static_cast<unsigned long long>(r.fn), r.precision, r.recall,
                r.f1);
  return buf;
}

std::string format_table(
    std::span<const std::pair<std::string, MatchReport>> rows) {
  std::size_t name_width = 5;
  for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "scope"
      << std::right << std::setw(10) << "TP" << std::setw(10) << "FP"
      << std::setw(10) << "FN" << std::setw(11) << "precision"
      << std::setw(9) << "recall" << std::setw(9) << "F1" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << name
        << std::right << std::setw(10) << r.tp << std::setw(10) << r.fp
        << std::setw(10) << r.fn << std::setw(11) << r.precision
        << std::setw(9) << r.recall << std::setw(9) << r.f1 << '\n';
  }
  return out.str();
}

}  // namespace petnet
