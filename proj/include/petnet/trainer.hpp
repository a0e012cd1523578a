#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "petnet/core.hpp"
#include "petnet/loss.hpp"
#include "petnet/metrics.hpp"
#include "petnet/snn.hpp"

namespace petnet {

struct NetConfig {
  std::uint32_t hidden = 0;  // 0 selects default_hidden_size(C)
  std::uint32_t layers = 1;  // hidden layer count
};

/// round(1.533 * C), the clinical 368/240 hidden-to-crystal ratio.
std::uint32_t default_hidden_size(std::uint32_t num_crystals);

/// Loss settings the trainer starts from: a = 1, b = 0.1, MSE timing,
/// value-gradient only at emitted spikes.
LossConfig default_training_loss();

struct TrainConfig {
  double learning_rate = 2.454e-3;
  std::uint32_t batch_size = 64;
  std::uint32_t max_epochs = 50;
  std::uint32_t patience = 3;
  /// Start counting patience only once validation F1 has been positive.
  bool patience_from_first_match = true;
  LossConfig loss = default_training_loss();
  /// Replace loss.time_unit by T so timing distances are fractions of the
  /// train length.
  bool normalize_timing = true;
  std::uint32_t eval_tolerance = kDefaultTolerance;
  std::uint64_t seed = 0;
  bool use_geometry = false;
  std::uint32_t geometry_width = 2;
  double validation_fraction = 0.2;
  unsigned threads = 1;

  void validate() const;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t step = 0;

  explicit AdamState(Eigen::Index size = 0)
      : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)) {}
};

/// Bias-corrected Adam update of `params` in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               AdamState& state, double lr);

/// Early stopping on a score that should increase. Improvement is strict.
/// With `hold_at_zero`, epochs scoring 0 before any positive score do not
/// use up patience (a network that has not fired yet cannot improve on 0).
class EarlyStopping {
 public:
  explicit EarlyStopping(std::uint32_t patience, bool hold_at_zero = false)
      : patience_(patience), hold_at_zero_(hold_at_zero) {}

  /// Records the score of the next epoch (1-based); true means stop now.
  bool observe(double score);
  bool improved_last() const { return best_epoch_ == epoch_; }
  std::uint32_t best_epoch() const { return best_epoch_; }
  double best_score() const { return best_score_; }

 private:
  std::uint32_t patience_;
  bool hold_at_zero_;
  std::uint32_t epoch_ = 0;
  std::uint32_t best_epoch_ = 0;
  std::uint32_t since_best_ = 0;
  double best_score_ = -1.0;
};

struct EpochRecord {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double val_f1 = 0.0;
  double val_precision = 0.0;
  double val_recall = 0.0;
};

std::string history_csv(std::span<const EpochRecord> history);

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded permutation; the first (1 - validation_fraction) share trains.
DataSplit split_dataset(std::size_t count, double validation_fraction,
                        std::uint64_t seed);

struct TrainResult {
  LifNetwork network;  // best validation-F1 checkpoint
  std::vector<EpochRecord> history;
  std::uint32_t best_epoch = 0;
  DataSplit split;
  /// Mean loss of every optimizer step, in order.
  std::vector<double> batch_losses;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Network input for one hit train: the train itself, or train plus
/// geometry channels.
Eigen::MatrixXd network_input(const SpikeTrain& hits, bool use_geometry,
                              std::uint32_t geometry_width);

LifNetwork make_network(const DetectorConfig& detector, const NetConfig& net,
                        const TrainConfig& cfg);

/// cfg.loss with the timing unit resolved for trains of `timesteps` steps.
LossConfig effective_loss(const TrainConfig& cfg, std::uint32_t timesteps);

/// Loss value and accumulated parameter gradient of one sample.
double sample_gradient(const LifNetwork& net, const Sample& sample,
                       const TrainConfig& cfg, const LossConfig& loss,
                       NetworkGradients& grads);

TrainResult train(std::span<const Sample> dataset, const NetConfig& net,
                  const TrainConfig& cfg,
                  const EpochCallback& on_epoch = nullptr);

/// Continues from an existing network (used for lr = 0 and resume checks).
TrainResult train_from(LifNetwork initial, std::span<const Sample> dataset,
                       const TrainConfig& cfg,
                       const EpochCallback& on_epoch = nullptr);

struct PredictionRun {
  std::vector<SpikeTrain> trains;
  double seconds = 0.0;
  double samples_per_second() const {
    return seconds > 0.0 ? static_cast<double>(trains.size()) / seconds : 0.0;
  }
};

PredictionRun predict(const LifNetwork& net, std::span<const Sample> samples,
                      bool use_geometry, std::uint32_t geometry_width = 2,
                      unsigned threads = 1);

}  // namespace petnet
