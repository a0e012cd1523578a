#include "petnet/loss.hpp"

#include <algorithm>
#include <limits>

namespace petnet {
namespace {

void check_shapes(const GridShape& pred, const GridShape& label) {
  if (!(pred == label)) {
    throw std::invalid_argument(
        "prediction and label dimensions differ: " +
        std::to_string(pred.channels) + "x" + std::to_string(pred.timesteps) +
        " vs " + std::to_string(label.channels) + "x" +
        std::to_string(label.timesteps));
  }
}

// Sum over `from` of the squared distance to the nearest element of `to`;
// `empty_penalty` per element when `to` is empty. Both sorted ascending.
double nearest_sq_sum(const std::vector<std::uint32_t>& from,
                      const std::vector<std::uint32_t>& to,
                      double empty_penalty) {
  if (from.empty()) return 0.0;
  if (to.empty()) return empty_penalty * static_cast<double>(from.size());
  double sum = 0.0;
  std::size_t j = 0;
  for (const auto s : from) {
    while (j + 1 < to.size() && to[j + 1] <= s) ++j;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = j; k < std::min(j + 2, to.size()); ++k) {
      const double d = static_cast<double>(s) - static_cast<double>(to[k]);
      best = std::min(best, d * d);
    }
    sum += best;
  }
  return sum;
}

double empty_penalty(const GridShape& shape, double unit) {
  const double t = shape.timesteps / unit;
  return t * t;
}

double sq_sum_in_units(const std::vector<std::uint32_t>& from,
                       const std::vector<std::uint32_t>& to,
                       const GridShape& shape, double unit) {
  if (to.empty()) return nearest_sq_sum(from, to, empty_penalty(shape, unit));
  return nearest_sq_sum(from, to, 0.0) / (unit * unit);
}

}  // namespace

void LossConfig::validate() const {
  if (a < 0.0 || b < 0.0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  if (a == 0.0 && (b == 0.0 || timing == TimingKind::kNone)) {
    throw std::invalid_argument("loss has no active term");
  }
  if (!(time_unit > 0.0)) {
    throw std::invalid_argument("timing unit must be positive");
  }
}

std::string to_string(TimingKind kind) {
  switch (kind) {
    case TimingKind::kNone: return "none";
    case TimingKind::kMse: return "mse";
    case TimingKind::kChamfer: return "chamfer";
  }
  return "?";
}

TimingKind parse_timing_kind(const std::string& name) {
  if (name == "none") return TimingKind::kNone;
  if (name == "mse") return TimingKind::kMse;
  if (name == "chamfer") return TimingKind::kChamfer;
  throw std::invalid_argument("unknown timing loss '" + name + "'");
}

std::string to_string(TimingGradient mode) {
  return mode == TimingGradient::kAllSteps ? "all-steps" : "emitted-spikes";
}

TimingGradient parse_timing_gradient(const std::string& name) {
  if (name == "all-steps") return TimingGradient::kAllSteps;
  if (name == "emitted-spikes") return TimingGradient::kEmittedSpikes;
  throw std::invalid_argument("unknown timing gradient mode '" + name + "'");
}

std::vector<std::uint32_t> spike_indices(
    const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  std::vector<std::uint32_t> out;
  for (Eigen::Index t = 0; t < row.size(); ++t) {
    if (row(t) == 1.0) {
      out.push_back(static_cast<std::uint32_t>(t));
    } else if (row(t) != 0.0) {
      throw std::invalid_argument("non-binary value at index " +
                                  std::to_string(t));
    }
  }
  return out;
}

double count_loss(const SpikeTrain& pred, const SpikeTrain& label) {
  check_shapes(pred.shape(), label.shape());
  const std::uint32_t channels = pred.shape().channels;
  std::vector<double> diff(channels, 0.0);
  for (const auto& e : pred.events()) diff[e.crystal] += 1.0;
  for (const auto& e : label.events()) diff[e.crystal] -= 1.0;
  double sum = 0.0;
  for (const double d : diff) sum += d * d;
  return sum / channels;
}

double timing_loss_mse(const SpikeTrain& pred, const SpikeTrain& label,
                       double time_unit) {
  check_shapes(pred.shape(), label.shape());
  const auto ps = pred.times_by_crystal();
  const auto ys = label.times_by_crystal();
  double sum = 0.0;
  for (std::size_t c = 0; c < ps.size(); ++c) {
    sum += sq_sum_in_units(ps[c], ys[c], pred.shape(), time_unit);
  }
  return sum;
}

double timing_loss_chamfer(const SpikeTrain& pred, const SpikeTrain& label,
                           double time_unit) {
  return timing_loss_mse(pred, label, time_unit) +
         timing_loss_mse(label, pred, time_unit);
}

double combined_loss(const SpikeTrain& pred, const SpikeTrain& label,
                     const LossConfig& cfg) {
  cfg.validate();
  double loss = cfg.a * count_loss(pred, label);
  switch (cfg.timing) {
    case TimingKind::kNone: break;
    case TimingKind::kMse:
      loss += cfg.b * timing_loss_mse(pred, label, cfg.time_unit);
      break;
    case TimingKind::kChamfer:
      loss += cfg.b * timing_loss_chamfer(pred, label, cfg.time_unit);
      break;
  }
  return loss;
}

Eigen::MatrixXd label_distance_map(const SpikeTrain& label,
                                   double time_unit) {
  const GridShape shape = label.shape();
  const double penalty = empty_penalty(shape, time_unit);
  const double unit_sq = time_unit * time_unit;
  Eigen::MatrixXd d(shape.channels, shape.timesteps);
  const auto ys = label.times_by_crystal();
  const auto steps = static_cast<std::int64_t>(shape.timesteps);
  for (std::uint32_t c = 0; c < shape.channels; ++c) {
    const auto& y = ys[c];
    if (y.empty()) {
      d.row(c).setConstant(penalty);
      continue;
    }
    std::size_t j = 0;
    for (std::int64_t t = 0; t < steps; ++t) {
      while (j + 1 < y.size() && static_cast<std::int64_t>(y[j + 1]) <= t) ++j;
      std::int64_t best = std::abs(t - static_cast<std::int64_t>(y[j]));
      if (j + 1 < y.size()) {
        best = std::min(best, std::abs(t - static_cast<std::int64_t>(y[j + 1])));
      }
      d(c, t) = static_cast<double>(best * best) / unit_sq;
    }
  }
  return d;
}

namespace {

Eigen::VectorXd label_counts(const SpikeTrain& label) {
  Eigen::VectorXd n = Eigen::VectorXd::Zero(label.shape().channels);
  for (const auto& e : label.events()) n(e.crystal) += 1.0;
  return n;
}

void check_dense(const Eigen::MatrixXd& pred, const SpikeTrain& label) {
  check_shapes(GridShape(static_cast<std::uint32_t>(pred.rows()),
                         static_cast<std::uint32_t>(pred.cols())),
               label.shape());
}

}  // namespace

Eigen::MatrixXd loss_gradient(const Eigen::MatrixXd& pred,
                              const SpikeTrain& label, const LossConfig& cfg) {
  cfg.validate();
  check_dense(pred, label);
  const double channels = static_cast<double>(pred.rows());
  const Eigen::VectorXd count_grad =
      cfg.a * (2.0 / channels) * (pred.rowwise().sum() - label_counts(label));
  Eigen::MatrixXd grad = count_grad.replicate(1, pred.cols());
  if (cfg.timing != TimingKind::kNone && cfg.b != 0.0) {
    const Eigen::MatrixXd d = label_distance_map(label, cfg.time_unit);
    if (cfg.timing_gradient == TimingGradient::kAllSteps) {
      grad += cfg.b * d;
    } else {
      // f'(P) = 4P - 3P^2; equals S on binary spikes.
      const Eigen::MatrixXd gate =
          (4.0 * pred.array() - 3.0 * pred.array().square()).matrix();
      grad += cfg.b * d.cwiseProduct(gate);
    }
  }
  return grad;
}

double relaxed_loss(const Eigen::MatrixXd& pred, const SpikeTrain& label,
                    const LossConfig& cfg) {
  cfg.validate();
  check_dense(pred, label);
  const double channels = static_cast<double>(pred.rows());
  const Eigen::VectorXd diff = pred.rowwise().sum() - label_counts(label);
  double loss = cfg.a * diff.squaredNorm() / channels;
  if (cfg.timing != TimingKind::kNone) {
    const Eigen::MatrixXd d = label_distance_map(label, cfg.time_unit);
    if (cfg.timing_gradient == TimingGradient::kAllSteps) {
      loss += cfg.b * pred.cwiseProduct(d).sum();
    } else {
      const Eigen::ArrayXXd p = pred.array();
      loss += cfg.b * ((2.0 * p.square() - p.cube()) * d.array()).sum();
    }
    if (cfg.timing == TimingKind::kChamfer) {
      loss += cfg.b *
              timing_loss_mse(label, threshold_dense(pred), cfg.time_unit);
    }
  }
  return loss;
}

}  // namespace petnet
