#include <stdexcept>

#include "doctest.h"
#include "petnet/metrics.hpp"
#include "test_support.hpp"

using namespace petnet;

namespace {
const GridShape kShape(8, 400);
SpikeTrain one(std::uint32_t t, std::uint32_t c) { return SpikeTrain(kShape, {{t, c}}); }
}  // namespace

TEST_CASE("tolerance decides a match") {
  const MatchReport hit = match_spikes(one(100, 3), one(130, 3), 40);
  CHECK(hit == MatchReport::from_counts(1, 0, 0));
  CHECK(hit.f1 == 1.0);
  const MatchReport edge = match_spikes(one(100, 3), one(140, 3), 40);
  CHECK(edge.tp == 1);
  const MatchReport miss = match_spikes(one(150, 3), one(100, 3), 40);
  CHECK(miss.tp == 0);
  CHECK(miss.fp == 1);
  CHECK(miss.fn == 1);
  // Other crystals never match.
  CHECK(match_spikes(one(100, 3), one(100, 4), 40).tp == 0);
}

TEST_CASE("identity and empty cases") {
  Rng rng(1, 0);
  const SpikeTrain y = testing::random_train(kShape, 30, rng);
  const MatchReport same = match_spikes(y, y, 40);
  CHECK(same.tp == y.size());
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  CHECK(same.f1 == 1.0);

  const MatchReport empty_pred = match_spikes(SpikeTrain(kShape), y, 40);
  CHECK(empty_pred.tp == 0);
  CHECK(empty_pred.fn == y.size());
  CHECK(empty_pred.precision == 0.0);
  CHECK(empty_pred.recall == 0.0);
  CHECK(empty_pred.f1 == 0.0);

  const MatchReport empty_label = match_spikes(y, SpikeTrain(kShape), 40);
  CHECK(empty_label.fp == y.size());
  CHECK(empty_label.tp == 0);
}

TEST_CASE("each spike is used once") {
  const SpikeTrain pred(kShape, {{100, 2}, {110, 2}});
  const MatchReport r = match_spikes(pred, one(105, 2), 40);
  CHECK(r.tp == 1);
  CHECK(r.fp == 1);
  CHECK(r.fn == 0);
}

TEST_CASE("greedy equals maximum matching") {
  Rng rng(17, 0);
  for (int rep = 0; rep < 300; ++rep) {
    const GridShape s(4, 60);
    const SpikeTrain p = testing::random_train(s, rng.below(20), rng);
    const SpikeTrain y = testing::random_train(s, rng.below(20), rng);
    const auto tol = static_cast<std::uint32_t>(rng.below(12));
    const MatchReport greedy = match_spikes(p, y, tol);
    CHECK(greedy.tp == testing::max_matching(p, y, tol));
    CHECK(greedy.tp + greedy.fp == p.size());
    CHECK(greedy.tp + greedy.fn == y.size());
    CHECK(greedy == match_spikes_reference(p, y, tol));
  }
  Rng big(1, 1);
  const SpikeTrain crowded = testing::random_train(GridShape(1, 100), 40, big);
  CHECK_THROWS_AS(match_spikes_reference(crowded, crowded, 1), std::length_error);
}

TEST_CASE("micro average") {
  MatchReport total = MatchReport::from_counts(1, 0, 1);
  total += MatchReport::from_counts(1, 1, 0);
  CHECK(total.tp == 2);
  CHECK(total.fp == 1);
  CHECK(total.fn == 1);
  CHECK(total.precision == doctest::Approx(2.0 / 3.0));
  CHECK(total.recall == doctest::Approx(2.0 / 3.0));
  CHECK(total.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(MatchReport::from_counts(0, 0, 0).f1 == 0.0);
}

TEST_CASE("dataset evaluation") {
  Rng rng(2, 0);
  std::vector<Sample> samples;
  std::vector<SpikeTrain> perfect, silent;
  for (int i = 0; i < 6; ++i) {
    const SpikeTrain y = testing::random_train(kShape, 8, rng);
    samples.push_back({y, y});
    perfect.push_back(y);
    silent.push_back(SpikeTrain(kShape));
  }
  const DatasetEvaluation good = evaluate_dataset(perfect, samples, 40, 3);
  CHECK(good.total.f1 == 1.0);
  CHECK(good.per_sample.size() == 6);
  const DatasetEvaluation none = evaluate_dataset(silent, samples, 40);
  CHECK(none.total.precision == 0.0);
  CHECK(none.total.recall == 0.0);
  CHECK(none.total.f1 == 0.0);
  silent.pop_back();
  CHECK_THROWS(evaluate_dataset(silent, samples, 40));
}

TEST_CASE("matched label flags") {
  const SpikeTrain y(kShape, {{10, 1}, {300, 1}});
  const auto flags = matched_labels(one(20, 1), y, 40);
  CHECK(flags == std::vector<bool>{true, false});
}

TEST_CASE("pair diagnostic") {
  const SpikeTrain y(kShape, {{10, 1}, {10, 5}, {200, 2}, {200, 6}});
  CHECK(label_pairs(y).size() == 2);
  const PairReport full = pair_report(y, y, 0);
  CHECK(full.label_pairs == 2);
  CHECK(full.detected_pairs == 2);
  const PairReport half = pair_report(SpikeTrain(kShape, {{10, 1}, {10, 5}, {200, 2}}), y, 0);
  CHECK(half.detected_pairs == 1);
  CHECK(half.recall() == 0.5);
}

TEST_CASE("report formatting") {
  CHECK(format_record(MatchReport::from_counts(2, 1, 1)) ==
        "2 1 1 0.666667 0.666667 0.666667");
  const std::vector<std::pair<std::string, MatchReport>> rows{
      {"a", MatchReport::from_counts(1, 0, 0)}};
  const std::string table = format_table(rows);
  CHECK(table.find("TP") != std::string::npos);
  CHECK(table.find("1.0000") != std::string::npos);
}
