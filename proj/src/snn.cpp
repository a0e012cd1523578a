#include "petnet/snn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "petnet/io.hpp"
#include "petnet/random.hpp"

namespace petnet {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

void check_input(const LifNetwork& net, const Eigen::MatrixXd& input) {
  if (net.layers().empty()) {
    throw std::invalid_argument("network has no layers");
  }
  if (input.rows() != net.in_dim()) {
    throw std::invalid_argument(
        "input has " + std::to_string(input.rows()) + " channels, network expects " +
        std::to_string(net.in_dim()));
  }
}

template <SpikeMode Mode>
ForwardResult run_forward(const LifNetwork& net, const Eigen::MatrixXd& input,
                          bool keep_trace) {
  check_input(net, input);
  const Eigen::Index steps = input.cols();
  ForwardResult result;
  result.trace.mode = Mode;
  if (keep_trace) result.trace.input = input;

  Eigen::MatrixXd x = input;
  for (const LifLayer& layer : net.layers()) {
    const Eigen::VectorXd alpha = layer.alpha();
    const Eigen::MatrixXd current = layer.weights * x;
    const Eigen::Index n = layer.out_dim();
    LayerTrace lt;
    lt.membrane.resize(n, steps);
    lt.spikes.resize(n, steps);

    Eigen::VectorXd carry = Eigen::VectorXd::Zero(n);  // M_{t-1} - S_{t-1}
    for (Eigen::Index t = 0; t < steps; ++t) {
      auto m = lt.membrane.col(t);
      auto s = lt.spikes.col(t);
      m = current.col(t) + alpha.cwiseProduct(carry);
      if constexpr (Mode == SpikeMode::kHard) {
        for (Eigen::Index j = 0; j < n; ++j) {
          s(j) = m(j) > layer.threshold ? 1.0 : 0.0;
        }
      } else {
        for (Eigen::Index j = 0; j < n; ++j) {
          s(j) = smooth_spike(m(j) - layer.threshold);
        }
      }
      carry = m - s;
    }
    x = lt.spikes;
    if (keep_trace) result.trace.layers.push_back(std::move(lt));
  }
  result.output = std::move(x);
  return result;
}

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <class T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t& pos,
         const char* what) {
  if (bytes.size() - pos < sizeof(T)) {
    throw FormatError(std::string("truncated checkpoint ") + what +
                          ": expected " + std::to_string(sizeof(T)) +
                          " bytes, " + std::to_string(bytes.size() - pos) +
                          " available",
                      pos);
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(bytes[pos + i]) << (8 * i);
  }
  pos += sizeof(T);
  return value;
}

}  // namespace

Eigen::VectorXd LifLayer::alpha() const { return sigmoid(decay_raw); }

LifNetwork::LifNetwork(std::vector<LifLayer> layers)
    : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].decay_raw.size() != layers_[l].out_dim()) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  ": decay vector does not match width");
    }
    if (l > 0 && layers_[l].in_dim() != layers_[l - 1].out_dim()) {
      throw std::invalid_argument("layer " + std::to_string(l) +
                                  ": input width does not chain");
    }
  }
}

LifNetwork LifNetwork::create(Eigen::Index in_dim,
                              const std::vector<Eigen::Index>& hidden,
                              Eigen::Index out_dim, std::uint64_t seed) {
  std::vector<Eigen::Index> dims{in_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out_dim);
  for (auto d : dims) {
    if (d < 1) throw std::invalid_argument("layer widths must be positive");
  }

  Rng rng(seed, 0x77656967ULL);
  const double raw_alpha = std::log(0.9 / 0.1);
  std::vector<LifLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LifLayer layer;
    const double bound = std::sqrt(1.0 / static_cast<double>(dims[l]));
    layer.weights.resize(dims[l + 1], dims[l]);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = rng.uniform(-bound, bound);
      }
    }
    layer.decay_raw = Eigen::VectorXd::Constant(dims[l + 1], raw_alpha);
    layers.push_back(std::move(layer));
  }
  return LifNetwork(std::move(layers));
}

Eigen::Index LifNetwork::in_dim() const {
  return layers_.empty() ? 0 : layers_.front().in_dim();
}

Eigen::Index LifNetwork::out_dim() const {
  return layers_.empty() ? 0 : layers_.back().out_dim();
}

std::size_t LifNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    n += static_cast<std::size_t>(l.weights.size() + l.decay_raw.size());
  }
  return n;
}

bool LifNetwork::operator==(const LifNetwork& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.weights.rows() != b.weights.rows() ||
        a.weights.cols() != b.weights.cols() || a.weights != b.weights ||
        a.decay_raw != b.decay_raw || a.threshold != b.threshold) {
      return false;
    }
  }
  return true;
}

double surrogate_derivative(double m) {
  const double pm = kPi * m;
  return 1.0 / (kPi * (1.0 + pm * pm));
}

double smooth_spike(double m) { return std::atan(kPi * m) / kPi + 0.5; }

double smooth_spike_derivative(double m) {
  const double pm = kPi * m;
  return 1.0 / (1.0 + pm * pm);
}

ForwardResult forward(const LifNetwork& net, const Eigen::MatrixXd& input) {
  return run_forward<SpikeMode::kHard>(net, input, true);
}

ForwardResult forward_relaxed(const LifNetwork& net,
                              const Eigen::MatrixXd& input) {
  return run_forward<SpikeMode::kRelaxed>(net, input, true);
}

Eigen::MatrixXd infer(const LifNetwork& net, const Eigen::MatrixXd& input) {
  return run_forward<SpikeMode::kHard>(net, input, false).output;
}

NetworkGradients NetworkGradients::zeros_like(const LifNetwork& net) {
  NetworkGradients g;
  for (const auto& l : net.layers()) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.out_dim(), l.in_dim()));
    g.decay_raw.push_back(Eigen::VectorXd::Zero(l.out_dim()));
  }
  return g;
}

NetworkGradients& NetworkGradients::operator+=(const NetworkGradients& other) {
  if (other.weights.size() != weights.size()) {
    throw std::invalid_argument("gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    decay_raw[l] += other.decay_raw[l];
  }
  return *this;
}

NetworkGradients& NetworkGradients::operator*=(double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= scale;
    decay_raw[l] *= scale;
  }
  return *this;
}

Eigen::VectorXd NetworkGradients::flatten() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].size() + decay_raw[l].size();
  }
  Eigen::VectorXd flat(n);
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(pos, weights[l].size()) = weights[l].reshaped();
    pos += weights[l].size();
    flat.segment(pos, decay_raw[l].size()) = decay_raw[l];
    pos += decay_raw[l].size();
  }
  return flat;
}

NetworkGradients backward(const LifNetwork& net, const ForwardTrace& trace,
                          const Eigen::MatrixXd& grad_spikes,
                          std::span<const Eigen::MatrixXd> grad_membranes) {
  const auto layers = net.layers();
  if (trace.layers.size() != layers.size() ||
      trace.input.rows() != net.in_dim()) {
    throw std::invalid_argument("trace does not belong to this network");
  }
  const Eigen::Index steps = trace.input.cols();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (trace.layers[l].membrane.rows() != layers[l].out_dim() ||
        trace.layers[l].membrane.cols() != steps) {
      throw std::invalid_argument("trace does not belong to this network");
    }
  }
  if (grad_spikes.rows() != net.out_dim() || grad_spikes.cols() != steps) {
    throw std::invalid_argument("output gradient has the wrong shape");
  }
  if (!grad_membranes.empty() && grad_membranes.size() != layers.size()) {
    throw std::invalid_argument("need one membrane gradient per layer");
  }

  const auto spike_derivative = trace.mode == SpikeMode::kHard
                                    ? &surrogate_derivative
                                    : &smooth_spike_derivative;

  NetworkGradients grads = NetworkGradients::zeros_like(net);
  Eigen::MatrixXd grad_out = grad_spikes;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const LifLayer& layer = layers[li];
    const LayerTrace& lt = trace.layers[li];
    const Eigen::MatrixXd& layer_input =
        li == 0 ? trace.input : trace.layers[li - 1].spikes;
    const Eigen::VectorXd alpha = layer.alpha();
    const Eigen::Index n = layer.out_dim();

    Eigen::MatrixXd grad_current(n, steps);
    Eigen::VectorXd grad_alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad_next = Eigen::VectorXd::Zero(n);  // dL/dM_{t+1}
    Eigen::VectorXd grad_m(n);
    for (Eigen::Index t = steps; t-- > 0;) {
      for (Eigen::Index j = 0; j < n; ++j) {
        // S_t reaches the loss directly and through the reset of M_{t+1}.
        const double grad_s = grad_out(j, t) - alpha(j) * grad_next(j);
        grad_m(j) = grad_s * spike_derivative(lt.membrane(j, t) -
                                              layer.threshold) +
                    alpha(j) * grad_next(j);
      }
      if (!grad_membranes.empty()) grad_m += grad_membranes[li].col(t);
      if (t > 0) {
        grad_alpha += grad_m.cwiseProduct(lt.membrane.col(t - 1) -
                                          lt.spikes.col(t - 1));
      }
      grad_current.col(t) = grad_m;
      grad_next = grad_m;
    }
    grads.weights[li] = grad_current * layer_input.transpose();
    grads.decay_raw[li] =
        grad_alpha.cwiseProduct(alpha.cwiseProduct(
            (Eigen::VectorXd::Ones(n) - alpha)));
    if (li > 0) grad_out = layer.weights.transpose() * grad_current;
  }
  return grads;
}

Eigen::VectorXd flatten_parameters(const LifNetwork& net) {
  NetworkGradients as_grads;
  for (const auto& l : net.layers()) {
    as_grads.weights.push_back(l.weights);
    as_grads.decay_raw.push_back(l.decay_raw);
  }
  return as_grads.flatten();
}

void assign_parameters(LifNetwork& net, const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != net.parameter_count()) {
    throw std::invalid_argument("parameter vector has the wrong length");
  }
  Eigen::Index pos = 0;
  for (auto& l : net.layers()) {
    l.weights.reshaped() = flat.segment(pos, l.weights.size());
    pos += l.weights.size();
    l.decay_raw = flat.segment(pos, l.decay_raw.size());
    pos += l.decay_raw.size();
  }
}

std::vector<std::uint8_t> encode_checkpoint(const LifNetwork& net) {
  std::vector<std::uint8_t> out{'P', 'E', 'T', 'W'};
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.in_dim()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_dim()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(l.weights(r, c)));
      }
    }
    for (Eigen::Index j = 0; j < l.decay_raw.size(); ++j) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(l.decay_raw(j)));
    }
  }
  return out;
}

LifNetwork decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "PETW", 4) != 0) {
    throw FormatError("bad checkpoint magic", 0);
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(bytes, pos, "version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version mismatch: file has " +
                          std::to_string(version),
                      4);
  }
  const auto count = get_le<std::uint32_t>(bytes, pos, "layer count");
  if (count == 0) throw FormatError("checkpoint has no layers", 8);
  std::vector<LifLayer> layers;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::size_t at = pos;
    const auto in = get_le<std::uint32_t>(bytes, pos, "layer header");
    const auto out = get_le<std::uint32_t>(bytes, pos, "layer header");
    if (in == 0 || out == 0) throw FormatError("zero-width layer", at);
    const std::size_t need =
        (static_cast<std::size_t>(in) * out + out) * sizeof(double);
    if (bytes.size() - pos < need) {
      throw FormatError("truncated checkpoint layer: expected " +
                            std::to_string(need) + " bytes, " +
                            std::to_string(bytes.size() - pos) + " available",
                        pos);
    }
    LifLayer layer;
    layer.weights.resize(out, in);
    for (std::uint32_t r = 0; r < out; ++r) {
      for (std::uint32_t c = 0; c < in; ++c) {
        layer.weights(r, c) =
            std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos, "weight"));
      }
    }
    layer.decay_raw.resize(out);
    for (std::uint32_t j = 0; j < out; ++j) {
      layer.decay_raw(j) =
          std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos, "decay"));
    }
    if (!layers.empty() && layers.back().out_dim() != layer.in_dim()) {
      throw FormatError("layer widths do not chain", at);
    }
    layers.push_back(std::move(layer));
  }
  if (pos != bytes.size()) {
    throw FormatError("trailing bytes after the last layer", pos);
  }
  return LifNetwork(std::move(layers));
}

void save_checkpoint(const LifNetwork& net, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(net));
}

LifNetwork load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("checkpoint not found: " + path.string());
  }
  return decode_checkpoint(read_file(path));
}

}  // namespace petnet
