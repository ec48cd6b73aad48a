#include "sarbot/netcore.hpp"

#include "sarbot/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace sarbot::net {
namespace {

double sign_value(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

// Uniform in [0, 1) from the top 53 bits; unlike std::uniform_real_distribution
// this is identical on every standard library.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "softsign") return Activation::kSoftsign;
  throw ConfigError(fmt::format("unknown activation '{}' (expected tanh or softsign)", name));
}

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kSoftsign:
      return "softsign";
  }
  return "?";
}

std::vector<LayerSpec> reference_architecture() {
  std::vector<LayerSpec> spec;
  spec.push_back({240, Activation::kTanh});
  for (std::size_t n = 13; n >= 4; --n) spec.push_back({n, Activation::kTanh});
  spec.push_back({3, Activation::kTanh});
  return spec;
}

RuleKind parse_rule(std::string_view name) {
  if (name == "gdm") return RuleKind::kGdm;
  if (name == "localprop" || name == "local" || name == "lp") return RuleKind::kLocalProp;
  if (name == "sar") return RuleKind::kSar;
  throw ConfigError(fmt::format("unknown rule '{}' (expected gdm, localprop or sar)", name));
}

std::string_view to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::kGdm:
      return "gdm";
    case RuleKind::kLocalProp:
      return "localprop";
    case RuleKind::kSar:
      return "sar";
  }
  return "?";
}

UpdateRule UpdateRule::make(RuleKind kind, double eta) {
  if (!std::isfinite(eta) || eta <= 0.0) {
    throw ConfigError(fmt::format("learning rate must be finite and > 0, got {}", eta));
  }
  return UpdateRule{kind, eta};
}

LoopGainSign sign_of(double loop_gain) {
  if (!std::isfinite(loop_gain) || loop_gain == 0.0) {
    throw ConfigError(fmt::format("loop gain must be finite and non-zero, got {}", loop_gain));
  }
  return loop_gain < 0.0 ? LoopGainSign::kNegative : LoopGainSign::kPositive;
}

double activate(Activation activation, double v) {
  switch (activation) {
    case Activation::kTanh:
      return std::tanh(v);
    case Activation::kSoftsign:
      return v / (1.0 + std::abs(v));
  }
  return 0.0;
}

double activate_derivative(Activation activation, double v) {
  switch (activation) {
    case Activation::kTanh: {
      // 1/cosh^2 stays positive far into saturation where 1 - tanh^2 rounds to 0.
      const double c = std::cosh(v);
      return 1.0 / (c * c);
    }
    case Activation::kSoftsign: {
      const double d = 1.0 + std::abs(v);
      return 1.0 / (d * d);
    }
  }
  return 0.0;
}

Network::Network(std::span<const LayerSpec> spec, Vector output_weights, std::uint64_t seed,
                 double init_scale)
    : output_weights_(std::move(output_weights)) {
  if (spec.size() < 2) {
    throw ConfigError(fmt::format("network needs at least 2 layers, got {}", spec.size()));
  }
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i].neuron_count < 1) {
      throw ConfigError(fmt::format("layer {} has no neurons", i));
    }
  }
  if (static_cast<std::size_t>(output_weights_.size()) != spec.back().neuron_count) {
    throw ConfigError(fmt::format("output weighting has {} entries but output layer has {} neurons",
                                  output_weights_.size(), spec.back().neuron_count));
  }
  if (!std::isfinite(init_scale) || init_scale < 0.0) {
    throw ConfigError(fmt::format("init scale must be finite and >= 0, got {}", init_scale));
  }

  input_count_ = spec.front().neuron_count;
  std::mt19937_64 rng(seed);
  layers_.reserve(spec.size() - 1);
  for (std::size_t i = 1; i < spec.size(); ++i) {
    Layer layer;
    layer.activation = spec[i].activation;
    const auto rows = static_cast<Eigen::Index>(spec[i].neuron_count);
    const auto cols = static_cast<Eigen::Index>(spec[i - 1].neuron_count);
    layer.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        layer.weights(r, c) = (2.0 * unit_uniform(rng) - 1.0) * init_scale;
      }
    }
    layer.initial = layer.weights;
    layer.sum_output = Vector::Zero(rows);
    layer.activation_value = Vector::Zero(rows);
    layer.delta = Vector::Zero(rows);
    layer.sign = Vector::Zero(rows);
    layer.local_error = Vector::Zero(rows);
    layers_.push_back(std::move(layer));
  }
  inputs_ = Vector::Zero(static_cast<Eigen::Index>(input_count_));
}

const Network::Layer& Network::checked(std::size_t layer) const {
  if (layer >= layers_.size()) {
    throw ConfigError(
        fmt::format("layer index {} out of range (network has {} layers)", layer, layers_.size()));
  }
  return layers_[layer];
}

std::size_t Network::neuron_count(std::size_t layer) const {
  return static_cast<std::size_t>(checked(layer).weights.rows());
}

const Matrix& Network::weights(std::size_t layer) const { return checked(layer).weights; }
const Matrix& Network::initial_weights(std::size_t layer) const { return checked(layer).initial; }
const Vector& Network::sum_outputs(std::size_t layer) const { return checked(layer).sum_output; }
const Vector& Network::activations(std::size_t layer) const {
  return checked(layer).activation_value;
}
const Vector& Network::deltas(std::size_t layer) const { return checked(layer).delta; }
const Vector& Network::signs(std::size_t layer) const { return checked(layer).sign; }
const Vector& Network::local_errors(std::size_t layer) const { return checked(layer).local_error; }

void Network::set_weights(std::size_t layer, const Matrix& weights) {
  const Layer& current = checked(layer);
  if (weights.rows() != current.weights.rows() || weights.cols() != current.weights.cols()) {
    throw ConfigError(fmt::format("layer {} expects a {}x{} matrix, got {}x{}", layer,
                                  current.weights.rows(), current.weights.cols(), weights.rows(),
                                  weights.cols()));
  }
  layers_[layer].weights = weights;
  forward_done_ = delta_done_ = sign_done_ = local_done_ = false;
}

double Network::forward(std::span<const double> inputs) {
  if (inputs.size() != input_count_) {
    throw ConfigError(
        fmt::format("network expects {} inputs, got {}", input_count_, inputs.size()));
  }
  forward_done_ = delta_done_ = sign_done_ = local_done_ = false;
  inputs_ = Eigen::Map<const Vector>(inputs.data(), static_cast<Eigen::Index>(inputs.size()));

  const Vector* previous = &inputs_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& layer = layers_[i];
    layer.sum_output.noalias() = layer.weights * *previous;
    if (!layer.sum_output.allFinite()) {
      throw NumericError(fmt::format("non-finite sum output in layer {}", i + 1));
    }
    layer.activation_value = layer.sum_output.unaryExpr(
        [act = layer.activation](double v) { return activate(act, v); });
    previous = &layer.activation_value;
  }
  predictive_action_ = output_weights_.dot(layers_.back().activation_value);
  if (!std::isfinite(predictive_action_)) {
    throw NumericError(fmt::format("non-finite predictive action at layer {}", layers_.size()));
  }
  forward_done_ = true;
  return predictive_action_;
}

void Network::require_forward(const char* what) const {
  if (!forward_done_) {
    throw StateError(fmt::format("{} called before forward()", what));
  }
}

Vector Network::derivative(const Layer& layer) const {
  return layer.sum_output.unaryExpr(
      [act = layer.activation](double v) { return activate_derivative(act, v); });
}

void Network::backprop_delta() {
  require_forward("backprop_delta");
  Layer& out = layers_.back();
  out.delta = output_weights_.cwiseProduct(derivative(out));
  for (std::size_t i = layers_.size() - 1; i-- > 0;) {
    const Layer& next = layers_[i + 1];
    layers_[i].delta = derivative(layers_[i]).cwiseProduct(next.weights.transpose() * next.delta);
  }
  delta_done_ = true;
}

void Network::sign_prop(double error) {
  require_forward("sign_prop");
  const double error_sign = sign_value(error);
  Layer& out = layers_.back();
  out.sign = (error_sign * output_weights_.cwiseProduct(derivative(out))).unaryExpr(&sign_value);
  for (std::size_t i = layers_.size() - 1; i-- > 0;) {
    const Layer& next = layers_[i + 1];
    layers_[i].sign = derivative(layers_[i])
                          .cwiseProduct(next.weights.transpose() * next.sign)
                          .unaryExpr(&sign_value);
  }
  sign_error_ = error;
  sign_done_ = true;
}

void Network::local_prop(double error) {
  require_forward("local_prop");
  Layer& out = layers_.back();
  out.local_error = output_weights_.cwiseProduct(derivative(out)) * error;
  for (std::size_t i = layers_.size() - 1; i-- > 0;) {
    // Each neuron's summed outgoing weights, scaled by E.
    const Vector outgoing = layers_[i + 1].weights.colwise().sum().transpose();
    layers_[i].local_error = derivative(layers_[i]).cwiseProduct(outgoing * error);
  }
  local_error_input_ = error;
  local_done_ = true;
}

std::vector<Matrix> Network::compute_update(const UpdateRule& rule, double kappa,
                                            LoopGainSign loop_sign) const {
  require_forward("apply_update");
  if (!std::isfinite(kappa)) {
    throw NumericError(fmt::format("closed-loop gradient is not finite: {}", kappa));
  }
  switch (rule.kind) {
    case RuleKind::kGdm:
      if (!delta_done_) throw StateError("gdm update requires backprop_delta() this tick");
      break;
    case RuleKind::kLocalProp:
      if (!local_done_) throw StateError("localprop update requires local_prop() this tick");
      break;
    case RuleKind::kSar:
      if (!sign_done_ || !local_done_) {
        throw StateError("sar update requires sign_prop() and local_prop() this tick");
      }
      if (sign_value(sign_error_) != sign_value(local_error_input_)) {
        throw StateError("sign_prop() and local_prop() were driven by errors of different sign");
      }
      break;
  }

  // GDM descends along -kappa * delta. The relevance rules carry the sign of E
  // in their error term already, so they use |kappa| with the loop-gain sign.
  const double relevance = static_cast<double>(static_cast<int>(loop_sign)) * std::abs(kappa);

  std::vector<Matrix> deltas;
  deltas.reserve(layers_.size());
  const Vector* previous = &inputs_;
  for (const Layer& layer : layers_) {
    switch (rule.kind) {
      case RuleKind::kGdm:
        deltas.push_back(-rule.eta * kappa * (layer.delta * previous->transpose()));
        break;
      case RuleKind::kLocalProp:
        deltas.push_back(-rule.eta * relevance * (layer.local_error * previous->transpose()));
        break;
      case RuleKind::kSar:
        deltas.push_back(-rule.eta * relevance *
                         (layer.sign.cwiseProduct(layer.local_error.cwiseAbs()) *
                          previous->transpose()));
        break;
    }
    previous = &layer.activation_value;
  }
  return deltas;
}

void Network::apply_update(const UpdateRule& rule, double kappa, LoopGainSign loop_sign) {
  const std::vector<Matrix> deltas = compute_update(rule, kappa, loop_sign);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weights += deltas[i];
    if (!layers_[i].weights.allFinite()) {
      throw NumericError(fmt::format("non-finite weight after update in layer {}", i + 1));
    }
  }
}

double Network::euclidean_distance(std::size_t layer) const {
  const Layer& l = checked(layer);
  return (l.weights - l.initial).norm();
}

Matrix Network::weight_heatmap(std::size_t layer) const {
  const Matrix magnitude = checked(layer).weights.cwiseAbs();
  const double lo = magnitude.minCoeff();
  const double hi = magnitude.maxCoeff();
  if (!(hi > lo)) return Matrix::Zero(magnitude.rows(), magnitude.cols());
  return (magnitude.array() - lo) / (hi - lo);
}

bool probe_descent(double loop_gain, std::uint64_t seed) {
  const std::vector<LayerSpec> spec = {{4}, {3}, {2}};
  Vector m(2);
  m << 1.0, 2.0;
  Network net(spec, m, seed, 0.5);
  const std::vector<double> inputs = {0.3, -0.2, 0.5, 0.1};
  const double offset = 1.0;
  const auto plant = [&](double action) { return offset + loop_gain * action; };

  const double error = plant(net.forward(inputs));
  net.backprop_delta();
  const double kappa = 2.0 * error * loop_gain;
  const double eta = 1e-3 / std::max(1.0, loop_gain * loop_gain);
  net.apply_update(UpdateRule::make(RuleKind::kGdm, eta), kappa, sign_of(loop_gain));
  const double after = plant(net.forward(inputs));
  return after * after < error * error;
}

void write_weight_snapshot(std::ostream& out, std::span<const Matrix> layers) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Matrix& w = layers[i];
    out << fmt::format("layer {} rows {} cols {}\n", i + 1, w.rows(), w.cols());
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (c > 0) out << ' ';
        out << fmt::format("{}", w(r, c));
      }
      out << '\n';
    }
  }
}

void write_weight_snapshot(std::ostream& out, const Network& network) {
  std::vector<Matrix> layers;
  for (std::size_t i = 0; i < network.layer_count(); ++i) layers.push_back(network.weights(i));
  write_weight_snapshot(out, layers);
}

std::vector<Matrix> read_weight_snapshot(std::istream& in) {
  std::vector<Matrix> layers;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream header(line);
    std::string layer_kw, rows_kw, cols_kw;
    std::size_t index = 0;
    Eigen::Index rows = 0, cols = 0;
    if (!(header >> layer_kw >> index >> rows_kw >> rows >> cols_kw >> cols) ||
        layer_kw != "layer" || rows_kw != "rows" || cols_kw != "cols" || rows < 1 || cols < 1) {
      throw ConfigError(fmt::format("malformed weight snapshot header: '{}'", line));
    }
    if (index != layers.size() + 1) {
      throw ConfigError(fmt::format("weight snapshot layers out of order at layer {}", index));
    }
    Matrix w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(in >> w(r, c))) {
          throw ConfigError(fmt::format("weight snapshot truncated in layer {}", index));
        }
      }
    }
    layers.push_back(std::move(w));
  }
  return layers;
}

}  // namespace sarbot::net
