#include "petnet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "petnet/geometry.hpp"
#include "petnet/parallel.hpp"
#include "petnet/random.hpp"

namespace petnet {

LossConfig default_training_loss() {
  LossConfig loss;
  loss.timing_gradient = TimingGradient::kEmittedSpikes;
  return loss;
}

LossConfig effective_loss(const TrainConfig& cfg, std::uint32_t timesteps) {
  LossConfig loss = cfg.loss;
  if (cfg.normalize_timing) loss.time_unit = static_cast<double>(timesteps);
  return loss;
}

std::uint32_t default_hidden_size(std::uint32_t num_crystals) {
  return static_cast<std::uint32_t>(std::lround(1.533 * num_crystals));
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument("learning rate must be non-negative");
  }
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (max_epochs < 1) throw std::invalid_argument("max epochs must be positive");
  if (patience < 1 || patience > max_epochs) {
    throw std::invalid_argument("patience must be in [1, max_epochs]");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must be in (0, 1)");
  }
  loss.validate();
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
               AdamState& state, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("Adam: parameter, gradient and moment sizes "
                                "differ");
  }
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v +
            (1.0 - state.beta2) * grads.cwiseProduct(grads);
  const double t = static_cast<double>(state.step);
  const double m_scale = 1.0 / (1.0 - std::pow(state.beta1, t));
  const double v_scale = 1.0 / (1.0 - std::pow(state.beta2, t));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double m_hat = state.m(i) * m_scale;
    const double v_hat = state.v(i) * v_scale;
    params(i) -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

bool EarlyStopping::observe(double score) {
  ++epoch_;
  if (hold_at_zero_ && score <= 0.0 && best_score_ <= 0.0) {
    if (best_epoch_ == 0) {
      best_score_ = score;
      best_epoch_ = epoch_;
    }
    since_best_ = 0;
    return false;
  }
  if (score > best_score_) {
    best_score_ = score;
    best_epoch_ = epoch_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  return since_best_ >= patience_;
}

std::string history_csv(std::span<const EpochRecord> history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_f1,val_precision,val_recall\n";
  out.precision(10);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_f1 << ','
        << r.val_precision << ',' << r.val_recall << '\n';
  }
  return out.str();
}

DataSplit split_dataset(std::size_t count, double validation_fraction,
                        std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, 0x73706c6974ULL);
  rng.shuffle(order.begin(), order.end());
  auto n_val = static_cast<std::size_t>(
      std::llround(validation_fraction * static_cast<double>(count)));
  if (count >= 2) n_val = std::clamp<std::size_t>(n_val, 1, count - 1);
  DataSplit split;
  split.train.assign(order.begin(), order.end() - static_cast<long>(n_val));
  split.validation.assign(order.end() - static_cast<long>(n_val), order.end());
  return split;
}

Eigen::MatrixXd network_input(const SpikeTrain& hits, bool use_geometry,
                              std::uint32_t geometry_width) {
  return use_geometry ? to_dense(augment(hits, geometry_width))
                      : to_dense(hits);
}

LifNetwork make_network(const DetectorConfig& detector, const NetConfig& net,
                        const TrainConfig& cfg) {
  const Eigen::Index c = detector.num_crystals();
  const Eigen::Index hidden =
      net.hidden == 0 ? default_hidden_size(detector.num_crystals()) : net.hidden;
  const std::vector<Eigen::Index> widths(net.layers, hidden);
  return LifNetwork::create(cfg.use_geometry ? 2 * c : c, widths, c, cfg.seed);
}

namespace {

void check_dims(const LifNetwork& net, const GridShape& shape,
                bool use_geometry) {
  const Eigen::Index c = shape.channels;
  const Eigen::Index expected_in = use_geometry ? 2 * c : c;
  if (net.in_dim() != expected_in || net.out_dim() != c) {
    std::ostringstream msg;
    msg << "network is " << net.in_dim() << "->" << net.out_dim()
        << " but data needs " << expected_in << "->" << c
        << (use_geometry ? " (with geometry)" : "");
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

double sample_gradient(const LifNetwork& net, const Sample& sample,
                       const TrainConfig& cfg, const LossConfig& loss_cfg,
                       NetworkGradients& grads) {
  const Eigen::MatrixXd x =
      network_input(sample.input, cfg.use_geometry, cfg.geometry_width);
  const ForwardResult fwd = forward(net, x);
  const double loss = relaxed_loss(fwd.output, sample.label, loss_cfg);
  const Eigen::MatrixXd grad_out =
      loss_gradient(fwd.output, sample.label, loss_cfg);
  grads += backward(net, fwd.trace, grad_out);
  return loss;
}

PredictionRun predict(const LifNetwork& net, std::span<const Sample> samples,
                      bool use_geometry, std::uint32_t geometry_width,
                      unsigned threads) {
  PredictionRun run;
  if (samples.empty()) return run;
  const GridShape shape = samples.front().input.shape();
  check_dims(net, shape, use_geometry);
  run.trains.assign(samples.size(), SpikeTrain(shape));
  const auto start = std::chrono::steady_clock::now();
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    if (!(samples[i].input.shape() == shape)) {
      throw std::invalid_argument("samples use different detector configs");
    }
    run.trains[i] = from_dense(
        infer(net, network_input(samples[i].input, use_geometry, geometry_width)));
  });
  run.seconds = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return run;
}

TrainResult train(std::span<const Sample> dataset, const NetConfig& net,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (dataset.empty()) throw std::invalid_argument("training set is empty");
  const DetectorConfig detector(dataset.front().input.shape().channels,
                                dataset.front().input.shape().timesteps);
  return train_from(make_network(detector, net, cfg), dataset, cfg, on_epoch);
}

TrainResult train_from(LifNetwork initial, std::span<const Sample> dataset,
                       const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (dataset.size() < 2) {
    throw std::invalid_argument("need at least 2 samples to split train and "
                                "validation data");
  }
  const GridShape shape = dataset.front().input.shape();
  for (const auto& s : dataset) {
    if (!(s.input.shape() == shape) || !(s.label.shape() == shape)) {
      throw std::invalid_argument("samples use different detector configs");
    }
  }
  check_dims(initial, shape, cfg.use_geometry);

  TrainResult result;
  result.split = split_dataset(dataset.size(), cfg.validation_fraction, cfg.seed);
  std::vector<Sample> validation;
  validation.reserve(result.split.validation.size());
  for (auto i : result.split.validation) validation.push_back(dataset[i]);

  const LossConfig loss_cfg = effective_loss(cfg, shape.timesteps);
  LifNetwork net = std::move(initial);
  Eigen::VectorXd params = flatten_parameters(net);
  AdamState adam(params.size());
  EarlyStopping stopper(cfg.patience, cfg.patience_from_first_match);
  result.network = net;

  std::vector<std::size_t> order = result.split.train;
  for (std::uint32_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng rng(cfg.seed, 0x65706f6300000000ULL + epoch);
    rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::size_t n = end - begin;
      std::vector<NetworkGradients> grads(n, NetworkGradients::zeros_like(net));
      std::vector<double> losses(n, 0.0);
      parallel_for(n, cfg.threads, [&](std::size_t k) {
        losses[k] = sample_gradient(net, dataset[order[begin + k]], cfg,
                                    loss_cfg, grads[k]);
      });
      // Fixed summation order keeps results independent of thread count.
      NetworkGradients total = NetworkGradients::zeros_like(net);
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        total += grads[k];
        batch_loss += losses[k];
      }
      total *= 1.0 / static_cast<double>(n);
      adam_step(params, total.flatten(), adam, cfg.learning_rate);
      assign_parameters(net, params);
      result.batch_losses.push_back(batch_loss / static_cast<double>(n));
      loss_sum += batch_loss;
    }

    const PredictionRun preds =
        predict(net, validation, cfg.use_geometry, cfg.geometry_width,
                cfg.threads);
    const MatchReport val =
        evaluate_dataset(preds.trains, validation, cfg.eval_tolerance).total;
    EpochRecord record{epoch, loss_sum / static_cast<double>(order.size()),
                       val.f1, val.precision, val.recall};
    result.history.push_back(record);
    const bool stop = stopper.observe(val.f1);
    if (stopper.improved_last()) result.network = net;
    if (on_epoch) on_epoch(record);
    if (stop) break;
  }
  result.best_epoch = stopper.best_epoch();
  return result;
}

}  // namespace petnet
