#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "petnet/core.hpp"

namespace petnet {

enum class TimingKind { kNone, kMse, kChamfer };

/// Where the timing term's value-gradient b * d_c(t) is applied.
enum class TimingGradient {
  kAllSteps,       // every (c, t): silent steps are pushed away from firing
  kEmittedSpikes,  // only where S(c, t) = 1
};

/// loss = a * count term + b * timing term.
struct LossConfig {
  double a = 1.0;
  double b = 0.1;
  TimingKind timing = TimingKind::kMse;
  TimingGradient timing_gradient = TimingGradient::kAllSteps;
  /// Timing distances are measured in multiples of this many steps. 1 keeps
  /// raw squared step distances (empty-set penalty T^2); T makes them
  /// dimensionless (penalty 1).
  double time_unit = 1.0;

  void validate() const;
};

std::string to_string(TimingKind kind);
TimingKind parse_timing_kind(const std::string& name);
std::string to_string(TimingGradient mode);
TimingGradient parse_timing_gradient(const std::string& name);

/// Times t with row(t) == 1, ascending. Throws on non-binary entries.
std::vector<std::uint32_t> spike_indices(
    const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// (1/C) sum_c (|I_S,c| - |I_Y,c|)^2.
double count_loss(const SpikeTrain& pred, const SpikeTrain& label);

/// sum_c sum_{s in I_S,c} min_{y in I_Y,c} ((s - y) / unit)^2. A predicted
/// spike in a crystal without labels costs (T / unit)^2.
double timing_loss_mse(const SpikeTrain& pred, const SpikeTrain& label,
                       double time_unit = 1.0);

/// timing_loss_mse plus the same sum with roles swapped.
double timing_loss_chamfer(const SpikeTrain& pred, const SpikeTrain& label,
                           double time_unit = 1.0);

double combined_loss(const SpikeTrain& pred, const SpikeTrain& label,
                     const LossConfig& cfg);

/// Squared distance (in `time_unit`s) from each time step to the nearest
/// label spike of each crystal; (T / unit)^2 where a crystal has none. C x T.
Eigen::MatrixXd label_distance_map(const SpikeTrain& label,
                                   double time_unit = 1.0);

/// dL/dS at fixed spike positions, C x T:
///   a (2/C)(|I_S,c| - |I_Y,c|) + b d_c(t) [* S(c,t) for kEmittedSpikes]
/// with d_c from label_distance_map (timing term omitted for kNone). The
/// Chamfer reverse sum does not depend on spike values and contributes
/// nothing.
Eigen::MatrixXd loss_gradient(const Eigen::MatrixXd& pred,
                              const SpikeTrain& label, const LossConfig& cfg);

/// The loss whose exact gradient is loss_gradient, evaluated on soft spike
/// values P: counts become row sums; the forward timing sum becomes
/// sum_t f(P(c,t)) d_c(t) with f(P) = P for kAllSteps and 2P^2 - P^3 for
/// kEmittedSpikes (f(0) = 0, f(1) = 1, f'(0) = 0, f'(1) = 1). The Chamfer
/// reverse sum is evaluated on P > 0.5. Equals combined_loss on binary input.
double relaxed_loss(const Eigen::MatrixXd& pred, const SpikeTrain& label,
                    const LossConfig& cfg);

}  // namespace petnet
