// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// asserted criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_oracle.hpp"
#include "petnet/cli.hpp"
#include "petnet/geometry.hpp"
#include "petnet/io.hpp"
#include "petnet/loss.hpp"
#include "petnet/metrics.hpp"
#include "petnet/parallel.hpp"
#include "petnet/scw.hpp"
#include "petnet/simulator.hpp"
#include "petnet/snn.hpp"
#include "petnet/trainer.hpp"
#include "test_support.hpp"

using namespace petnet;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(2);
  s << v;
  return s.str();
}

// 1. Fast and reference coincidence sorters agree field for field.
Outcome scw_oracle() {
  const auto start = Clock::now();
  Rng rng(101, 0);
  int mismatches = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::uint32_t c = 4 + 2 * static_cast<std::uint32_t>(rng.below(7));
    const DetectorConfig det(c, 80);
    const SpikeTrain hits = testing::random_train(det, rng.below(51), rng);
    ScwConfig cfg;
    cfg.window = 1 + static_cast<std::uint32_t>(rng.below(10));
    cfg.geometry_filter = rng.bernoulli(0.5);
    cfg.min_ring_separation = static_cast<std::uint32_t>(rng.below(c / 2));
    const ScwResult fast = scw_sort(hits.events(), cfg, det);
    if (!(fast == scw_reference(hits.events(), cfg, det))) ++mismatches;
  }
  const double secs = elapsed(start);
  return {mismatches == 0 && secs < 10.0,
          std::to_string(mismatches) + " mismatches in 1000 lists, " + num(secs, 2) + " s"};
}

// 2. Clean, well-separated decays are sorted perfectly.
Outcome scw_perfect_recovery() {
  SimulatorConfig sim;
  sim.detector = DetectorConfig(16, 2000);
  sim.detection_probability = 1.0;
  sim.max_shift = 0;
  sim.events_per_sample = 5;
  sim.rng_seed = 202;
  ScwConfig scw;
  MatchReport total;
  std::size_t kept = 0;
  for (std::uint64_t i = 0; kept < 500; ++i) {
    const Sample s = generate_sample(sim, i);
    // Keep samples whose decay times are pairwise more than a window apart.
    bool spaced = s.input.size() == 2 * sim.events_per_sample;
    const auto ev = s.input.events();
    for (std::size_t k = 2; spaced && k < ev.size(); k += 2) {
      spaced = ev[k].time - ev[k - 1].time > scw.window;
    }
    if (!spaced) continue;
    ++kept;
    const ScwResult r = scw_sort(ev, scw, sim.detector);
    total += match_spikes(scw_to_label(r, sim.detector), s.label, 0);
  }
  return {total.f1 == 1.0, "F1 " + num(total.f1, 6) + " over " + std::to_string(kept) +
                               " samples (TP " + std::to_string(total.tp) + ", FP " +
                               std::to_string(total.fp) + ", FN " +
                               std::to_string(total.fn) + ", tolerance 0)"};
}

// 3. Hand-computed loss values.
Outcome loss_values() {
  const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  const GridShape two(2, 20);
  const SpikeTrain pred = SpikeTrain::from_unsorted(two, {{5, 0}, {7, 1}});
  const SpikeTrain label = SpikeTrain::from_unsorted(two, {{3, 0}, {10, 0}, {7, 1}});
  const SpikeTrain s_counts = SpikeTrain::from_unsorted(two, {{0, 0}, {1, 0}, {2, 0}, {4, 1}});
  const SpikeTrain y_counts = SpikeTrain::from_unsorted(two, {{0, 0}, {5, 0}, {4, 1}});
  const GridShape one(1, 20);
  const GridShape hundred(1, 100);
  LossConfig cfg;
  cfg.timing = TimingKind::kChamfer;

  const double v1 = count_loss(s_counts, y_counts);
  const double v2 = timing_loss_mse(SpikeTrain(one, {{5, 0}}), SpikeTrain(one, {{3, 0}}));
  const double v3 = timing_loss_chamfer(SpikeTrain(one, {{5, 0}}),
                                        SpikeTrain(one, {{3, 0}, {10, 0}}));
  const double v4 = combined_loss(pred, label, cfg);
  const double v5 = timing_loss_mse(SpikeTrain(hundred, {{5, 0}}), SpikeTrain(hundred));
  const bool ok = close(v1, 0.5) && close(v2, 4.0) && close(v3, 33.0) && close(v4, 3.8) &&
                  close(v5, 10000.0);
  return {ok, "count " + num(v1, 9) + ", mse " + num(v2, 9) + ", chamfer " + num(v3, 9) +
                  ", combined " + num(v4, 9) + ", empty-label " + num(v5, 9)};
}

// 4. BPTT against central differences.
Outcome gradient_check() {
  const auto start = Clock::now();
  double worst_relaxed = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed, 404);
    LifNetwork net = LifNetwork::create(6, {8}, 6, seed);
    for (auto& layer : net.layers()) {
      layer.weights *= 2.5;
      for (Eigen::Index j = 0; j < layer.decay_raw.size(); ++j) {
        layer.decay_raw(j) = rng.uniform(-1.0, 3.0);
      }
    }
    const Eigen::MatrixXd x = to_dense(testing::random_train(GridShape(6, 20), 36, rng));
    Eigen::MatrixXd probe(6, 20);
    for (Eigen::Index i = 0; i < probe.size(); ++i) probe(i) = rng.uniform(-1, 1);
    const auto loss = [&](const LifNetwork& n) {
      return forward_relaxed(n, x).output.cwiseProduct(probe).sum();
    };
    const ForwardResult r = forward_relaxed(net, x);
    const Eigen::VectorXd analytic = backward(net, r.trace, probe).flatten();
    const Eigen::VectorXd numeric = testing::finite_difference_gradient(net, loss, 1e-4);
    worst_relaxed = std::max(worst_relaxed, testing::relative_error(analytic, numeric));
  }

  // With no spikes nothing reaches the output layer, so the probe covers the
  // membranes of every layer.
  double worst_linear = 0.0;
  double smallest_norm = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed, 405);
    LifNetwork net = LifNetwork::create(6, {8}, 6, seed);
    for (auto& layer : net.layers()) {
      layer.threshold = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < layer.decay_raw.size(); ++j) {
        layer.decay_raw(j) = rng.uniform(-1.0, 3.0);
      }
    }
    const Eigen::MatrixXd x = to_dense(testing::random_train(GridShape(6, 20), 36, rng));
    std::vector<Eigen::MatrixXd> targets;
    for (const auto& layer : net.layers()) {
      Eigen::MatrixXd t(layer.out_dim(), 20);
      for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = rng.uniform(-1, 1);
      targets.push_back(t);
    }
    const auto loss = [&](const LifNetwork& n) {
      const ForwardResult r = forward(n, x);
      double sum = 0.0;
      for (std::size_t l = 0; l < targets.size(); ++l) {
        sum += 0.5 * (r.trace.layers[l].membrane - targets[l]).squaredNorm();
      }
      return sum;
    };
    const ForwardResult r = forward(net, x);
    std::vector<Eigen::MatrixXd> gm;
    for (std::size_t l = 0; l < targets.size(); ++l) {
      gm.push_back(r.trace.layers[l].membrane - targets[l]);
    }
    const Eigen::VectorXd analytic =
        backward(net, r.trace, Eigen::MatrixXd::Zero(6, 20), gm).flatten();
    const Eigen::VectorXd numeric = testing::finite_difference_gradient(net, loss, 1e-4);
    worst_linear = std::max(worst_linear, testing::relative_error(analytic, numeric));
    smallest_norm = std::min(smallest_norm, numeric.norm());
  }
  const double secs = elapsed(start);
  return {worst_relaxed < 1e-4 && worst_linear < 1e-5 && smallest_norm > 0.0 && secs < 120.0,
          "worst relative error " + sci(worst_relaxed) + " relaxed (20 nets), " +
              sci(worst_linear) + " linear regime (20 nets, min |grad| " +
              sci(smallest_norm) + "), " + num(secs, 2) + " s"};
}

// 5. Geometry features against the brute-force oracle and the C=8 figure.
Outcome geometry_oracle() {
  Rng rng(505, 0);
  int mismatches = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::uint32_t c = 4 + 2 * static_cast<std::uint32_t>(rng.below(7));
    const std::uint32_t w = static_cast<std::uint32_t>(rng.below((c + 3) / 4));
    const SpikeTrain hits = testing::random_train(GridShape(c, 40), rng.below(60), rng);
    if (!(geometry_features(hits, w) == testing::brute_force_geometry(hits, w))) ++mismatches;
  }
  const SpikeTrain fig = geometry_features(SpikeTrain(GridShape(8, 10), {{5, 2}}), 1);
  const bool fig_ok = fig == SpikeTrain(GridShape(8, 10), {{5, 5}, {5, 6}, {5, 7}});
  return {mismatches == 0 && fig_ok, std::to_string(mismatches) +
                                         " mismatches in 200 trains; C=8 w=1 hit c=2 -> " +
                                         (fig_ok ? "{5,6,7}" : "wrong crystals")};
}

// 6. Greedy matching equals maximum matching.
Outcome matching_oracle() {
  Rng rng(606, 0);
  int mismatches = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const GridShape s(1 + static_cast<std::uint32_t>(rng.below(4)), 80);
    const SpikeTrain p = testing::random_train(s, rng.below(10 * s.channels + 1), rng);
    const SpikeTrain y = testing::random_train(s, rng.below(10 * s.channels + 1), rng);
    const auto tol = static_cast<std::uint32_t>(rng.below(20));
    const MatchReport greedy = match_spikes(p, y, tol);
    bool ok = greedy.tp == testing::max_matching(p, y, tol);
    try {
      ok = ok && greedy == match_spikes_reference(p, y, tol);
    } catch (const std::length_error&) {
      // Too crowded for the exhaustive search; the Kuhn oracle still applies.
    }
    if (!ok) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 500 instances"};
}

// 7. Pair fraction at p = 0.5.
Outcome simulator_statistics() {
  SimulatorConfig sim;
  sim.detector = DetectorConfig(240, 2000);
  sim.events_per_sample = 40;
  sim.detection_probability = 0.5;
  sim.rng_seed = 707;
  const GeneratedDataset d = generate_dataset(sim, 2500, worker_count());
  const double n = static_cast<double>(d.tally.decays);
  const double frac = static_cast<double>(d.tally.both_detected) / n;
  const double sigma = std::sqrt(0.25 * 0.75 / n);
  return {d.tally.decays >= 100000 && std::abs(frac - 0.25) <= 3 * sigma,
          "pair fraction " + num(frac, 5) + " over " + std::to_string(d.tally.decays) +
              " decays, 3 sigma = " + num(3 * sigma, 5)};
}

struct DeskRuns {
  std::vector<double> val_combined, val_count;
  std::vector<double> test_mse, test_chamfer;
  std::vector<std::uint32_t> epochs_combined;
  double seconds = 0.0;
};

DeskRuns desk_scale_runs() {
  SimulatorConfig sim;
  sim.detector = DetectorConfig(16, 200);
  sim.events_per_sample = 4;
  sim.detection_probability = 0.8;
  sim.rng_seed = 1;
  const std::vector<Sample> data = generate_dataset(sim, 2000, worker_count()).samples;
  sim.rng_seed = 2;
  const std::vector<Sample> test = generate_dataset(sim, 500, worker_count()).samples;

  DeskRuns out;
  const auto start = Clock::now();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.threads = worker_count();
    const NetConfig net{32, 1};
    const auto test_f1 = [&](const LifNetwork& n) {
      const PredictionRun p = predict(n, test, false, 2, cfg.threads);
      return evaluate_dataset(p.trains, test, cfg.eval_tolerance, cfg.threads).total.f1;
    };

    cfg.loss.timing = TimingKind::kMse;
    const TrainResult mse = train(data, net, cfg);
    out.val_combined.push_back(mse.history[mse.best_epoch - 1].val_f1);
    out.epochs_combined.push_back(static_cast<std::uint32_t>(mse.history.size()));
    out.test_mse.push_back(test_f1(mse.network));

    cfg.loss.timing = TimingKind::kNone;
    const TrainResult count = train(data, net, cfg);
    out.val_count.push_back(count.history[count.best_epoch - 1].val_f1);

    cfg.loss.timing = TimingKind::kChamfer;
    const TrainResult chamfer = train(data, net, cfg);
    out.test_chamfer.push_back(test_f1(chamfer.network));
  }
  out.seconds = elapsed(start);
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : "/") + num(x, 3);
  return s;
}

// 8. Desk-scale training reaches the smoke threshold and keeps the ordering.
Outcome desk_training(const DeskRuns& r) {
  bool ok = r.seconds < 30 * 60;
  for (double f : r.val_combined) ok = ok && f >= 0.75;
  ok = ok && mean(r.val_combined) >= mean(r.val_count) - 0.02;
  return {ok, "val F1 combined " + list(r.val_combined) + " (mean " + num(mean(r.val_combined), 3) +
                  "), count-only " + list(r.val_count) + " (mean " +
                  num(mean(r.val_count), 3) + "), seeds 1-3, all 9 runs in " +
                  num(r.seconds, 1) + " s"};
}

// 9. Chamfer and MSE timing variants agree (reported only).
Outcome chamfer_mse_agreement(const DeskRuns& r) {
  double worst = 0.0;
  for (std::size_t i = 0; i < r.test_mse.size(); ++i) {
    worst = std::max(worst, std::abs(r.test_mse[i] - r.test_chamfer[i]));
  }
  return {worst <= 0.02, "test F1 mse " + list(r.test_mse) + ", chamfer " +
                             list(r.test_chamfer) + ", largest gap " + num(worst, 4)};
}

// 10. Repeating a CLI pipeline reproduces every artifact byte for byte.
Outcome cli_determinism() {
  const auto run_pipeline = [](const testing::TempDir& dir) {
    const auto f = [&](const std::string& name) { return (dir / name).string(); };
    const std::vector<std::vector<std::string>> steps{
        {"simulate", "--crystals", "16", "--timesteps", "200", "--events", "4", "--samples",
         "300", "--seed", "11", "--out", f("train.petn")},
        {"simulate", "--crystals", "16", "--timesteps", "200", "--events", "4", "--samples",
         "100", "--seed", "12", "--out", f("test.petn")},
        {"train", "--data", f("train.petn"), "--out", f("model.petw"), "--hidden", "24",
         "--epochs", "4", "--patience", "4", "--seed", "13"},
        {"predict", "--data", f("test.petn"), "--model", f("model.petw"), "--out",
         f("pred.petn")},
        {"eval", "--pred", f("pred.petn"), "--data", f("test.petn"), "--report", f("eval.txt")},
        {"scw", "--data", f("test.petn"), "--out", f("scw.petn")},
        {"eval", "--pred", f("scw.petn"), "--data", f("test.petn"), "--report",
         f("scw_eval.txt")},
    };
    for (const auto& args : steps) {
      std::ostringstream out, err;
      if (run_cli(args, out, err) != 0) throw std::runtime_error(err.str());
    }
  };
  const std::vector<std::string> artifacts{"train.petn", "test.petn",  "model.petw",
                                           "model.petw.history.csv",    "pred.petn",
                                           "eval.txt",   "scw.petn",   "scw_eval.txt"};
  testing::TempDir a("accept_a"), b("accept_b");
  try {
    run_pipeline(a);
    run_pipeline(b);
  } catch (const std::exception& e) {
    return {false, std::string("pipeline failed: ") + e.what()};
  }
  std::size_t identical = 0;
  for (const auto& name : artifacts) {
    if (read_file(a / name) == read_file(b / name)) ++identical;
  }
  return {identical == artifacts.size(),
          std::to_string(identical) + "/" + std::to_string(artifacts.size()) +
              " artifacts byte-identical (datasets, checkpoint, history, reports)"};
}

}  // namespace

int main() {
  bool all = true;
  const auto report = [&all](int id, const char* name, const Outcome& o, bool asserted = true) {
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << name
              << ": " << o.detail << (asserted ? "" : " [reported, not asserted]") << std::endl;
    if (asserted) all = all && o.pass;
  };
  const auto guarded = [](const std::function<Outcome()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("threw: ") + e.what()};
    }
  };

  report(1, "SCW oracle equivalence", guarded(scw_oracle));
  report(2, "SCW perfect recovery", guarded(scw_perfect_recovery));
  report(3, "loss unit values", guarded(loss_values));
  report(4, "gradient check", guarded(gradient_check));
  report(5, "geometry oracle", guarded(geometry_oracle));
  report(6, "matching oracle", guarded(matching_oracle));
  report(7, "simulator statistics", guarded(simulator_statistics));
  DeskRuns desk;
  Outcome desk_error{true, ""};
  try {
    desk = desk_scale_runs();
  } catch (const std::exception& e) {
    desk_error = {false, std::string("threw: ") + e.what()};
  }
  report(8, "desk-scale training", desk_error.pass ? desk_training(desk) : desk_error);
  report(9, "Chamfer/MSE agreement", desk_error.pass ? chamfer_mse_agreement(desk) : desk_error,
         false);
  report(10, "CLI determinism", guarded(cli_determinism));
  std::cout << (all ? "ALL ASSERTED CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
  return all ? 0 : 1;
}
