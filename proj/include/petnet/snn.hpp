#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "petnet/core.hpp"

namespace petnet {

/// Fully-connected layer of leaky integrate-and-fire neurons:
///   M_t = W x_t + alpha * (M_{t-1} - S_{t-1}),   S_t = [M_t > threshold]
/// with alpha = sigmoid(decay_raw) learned per neuron.
struct LifLayer {
  Eigen::MatrixXd weights;    // out x in
  Eigen::VectorXd decay_raw;  // out
  double threshold = 1.0;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
  Eigen::VectorXd alpha() const;
};

class LifNetwork {
 public:
  LifNetwork() = default;
  explicit LifNetwork(std::vector<LifLayer> layers);

  /// `hidden` lists the hidden layer widths in order. Weights are uniform in
  /// +-sqrt(1/fan_in); every alpha starts at 0.9.
  static LifNetwork create(Eigen::Index in_dim,
                           const std::vector<Eigen::Index>& hidden,
                           Eigen::Index out_dim, std::uint64_t seed);

  std::span<const LifLayer> layers() const { return layers_; }
  std::span<LifLayer> layers() { return layers_; }
  Eigen::Index in_dim() const;
  Eigen::Index out_dim() const;
  std::size_t parameter_count() const;

  bool operator==(const LifNetwork& other) const;

 private:
  std::vector<LifLayer> layers_;
};

enum class SpikeMode {
  kHard,     // Heaviside forward, arctan surrogate backward
  kRelaxed,  // smooth arctan spikes forward, exact derivative backward
};

struct LayerTrace {
  Eigen::MatrixXd membrane;  // out x T
  Eigen::MatrixXd spikes;    // out x T
};

struct ForwardTrace {
  SpikeMode mode = SpikeMode::kHard;
  Eigen::MatrixXd input;  // in x T
  std::vector<LayerTrace> layers;
};

struct ForwardResult {
  Eigen::MatrixXd output;  // out x T
  ForwardTrace trace;
};

/// Binary spiking simulation. `input` is in_dim x T.
ForwardResult forward(const LifNetwork& net, const Eigen::MatrixXd& input);

/// Same recurrence with S = smooth_spike(M - threshold), so the whole map is
/// differentiable.
ForwardResult forward_relaxed(const LifNetwork& net,
                              const Eigen::MatrixXd& input);

/// Output spikes only, without retaining a trace.
Eigen::MatrixXd infer(const LifNetwork& net, const Eigen::MatrixXd& input);

/// dS/dM stand-in for the Heaviside step: 1 / (pi (1 + (pi m)^2)), where m is
/// the membrane relative to threshold.
double surrogate_derivative(double m);

/// atan(pi m) / pi + 1/2.
double smooth_spike(double m);
/// Exact derivative of smooth_spike: 1 / (1 + (pi m)^2).
double smooth_spike_derivative(double m);

struct NetworkGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> decay_raw;

  static NetworkGradients zeros_like(const LifNetwork& net);
  NetworkGradients& operator+=(const NetworkGradients& other);
  NetworkGradients& operator*=(double scale);
  /// All entries flattened layer by layer (weights, then decay_raw).
  Eigen::VectorXd flatten() const;
};

/// Reverse-mode differentiation of the forward recurrence (full BPTT,
/// including the reset path). `grad_spikes` is dL/dS for the output layer;
/// `grad_membranes`, when non-empty, holds one dL/dM matrix per layer.
NetworkGradients backward(const LifNetwork& net, const ForwardTrace& trace,
                          const Eigen::MatrixXd& grad_spikes,
                          std::span<const Eigen::MatrixXd> grad_membranes = {});

/// Parameter vector in NetworkGradients::flatten order.
Eigen::VectorXd flatten_parameters(const LifNetwork& net);
void assign_parameters(LifNetwork& net, const Eigen::VectorXd& flat);

// Checkpoint: "PETW", version u32, layer count u32, then per layer in_dim u32,
// out_dim u32, row-major weights as f64, decay_raw as f64 (all little-endian).
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const LifNetwork& net);
LifNetwork decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const LifNetwork& net, const std::filesystem::path& path);
LifNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace petnet
