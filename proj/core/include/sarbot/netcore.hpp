#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace sarbot::net {

enum class Activation {
  kTanh,
  kSoftsign,
};

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation activation);

// Layer description. The first entry of a network spec describes the input
// layer (only its neuron count is used).
struct LayerSpec {
  std::size_t neuron_count = 1;
  Activation activation = Activation::kTanh;
};

// 240 -> 13, 12, ..., 4 -> 3 with tanh units.
std::vector<LayerSpec> reference_architecture();

enum class RuleKind {
  kGdm,
  kLocalProp,
  kSar,
};

RuleKind parse_rule(std::string_view name);
std::string_view to_string(RuleKind kind);

struct UpdateRule {
  RuleKind kind = RuleKind::kSar;
  double eta = 0.0;

  // Throws ConfigError unless eta is finite and > 0.
  static UpdateRule make(RuleKind kind, double eta);
};

// Sign of the reflex loop gain dE/dA_P. Together with the closed-loop
// gradient it fixes the descent direction of the relevance-driven rules.
enum class LoopGainSign : int {
  kNegative = -1,
  kPositive = 1,
};

LoopGainSign sign_of(double loop_gain);

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Fully connected feed-forward network without biases.
//
// Layer indices are zero based: layer 0 is the first weight layer
// (inputs -> first hidden layer), layer L-1 is the output layer. The
// predictive action is the output activations weighted by `output_weights`.
//
// One tick is: forward(); then whichever of backprop_delta(), sign_prop(E),
// local_prop(E) the chosen rule needs; then apply_update(). A new forward()
// invalidates the error passes of the previous tick.
class Network {
 public:
  Network(std::span<const LayerSpec> spec, Vector output_weights, std::uint64_t seed,
          double init_scale = 0.1);

  std::size_t layer_count() const { return layers_.size(); }
  std::size_t input_count() const { return input_count_; }
  std::size_t neuron_count(std::size_t layer) const;
  const Vector& output_weights() const { return output_weights_; }

  const Matrix& weights(std::size_t layer) const;
  const Matrix& initial_weights(std::size_t layer) const;
  // Replaces the weights of one layer; shape must match. Invalidates the tick.
  void set_weights(std::size_t layer, const Matrix& weights);

  // Runs the forward pass and returns A_P = sum_k M_k * A^L_k.
  double forward(std::span<const double> inputs);

  // Internal error delta = dA_P/dv for every layer.
  void backprop_delta();
  // Sign matrices seeded by sign(E) at the output layer.
  void sign_prop(double error);
  // One-layer-deep local errors gamma driven by E.
  void local_prop(double error);

  // Weight increments for the current tick, one matrix per layer. `kappa` is
  // the closed-loop gradient 2*E*lambda.
  std::vector<Matrix> compute_update(const UpdateRule& rule, double kappa,
                                     LoopGainSign loop_sign) const;
  void apply_update(const UpdateRule& rule, double kappa, LoopGainSign loop_sign);

  const Vector& sum_outputs(std::size_t layer) const;
  const Vector& activations(std::size_t layer) const;
  const Vector& deltas(std::size_t layer) const;
  const Vector& signs(std::size_t layer) const;
  const Vector& local_errors(std::size_t layer) const;
  const Vector& inputs() const { return inputs_; }
  double predictive_action() const { return predictive_action_; }

  // sqrt(sum (w_now - w_init)^2) over one layer.
  double euclidean_distance(std::size_t layer) const;
  // |w| min-max normalised to [0, 1]; a constant layer maps to zeros.
  Matrix weight_heatmap(std::size_t layer) const;

 private:
  struct Layer {
    Activation activation = Activation::kTanh;
    Matrix weights;
    Matrix initial;
    Vector sum_output;
    Vector activation_value;
    Vector delta;
    Vector sign;
    Vector local_error;
  };

  const Layer& checked(std::size_t layer) const;
  Vector derivative(const Layer& layer) const;
  void require_forward(const char* what) const;

  std::size_t input_count_ = 0;
  Vector output_weights_;
  std::vector<Layer> layers_;
  Vector inputs_;
  double predictive_action_ = 0.0;

  bool forward_done_ = false;
  bool delta_done_ = false;
  bool sign_done_ = false;
  bool local_done_ = false;
  double sign_error_ = 0.0;
  double local_error_input_ = 0.0;
};

// Activation and its derivative, exposed for oracles and tests.
double activate(Activation activation, double v);
double activate_derivative(Activation activation, double v);

// Checks on a linear toy plant E = e0 + loop_gain * A_P that one small
// gradient step taken with this loop gain reduces E^2. All three rules share
// the descent orientation, so a passing probe validates the sign for each.
bool probe_descent(double loop_gain, std::uint64_t seed = 1);

// Weight snapshot: per layer a header `layer <l> rows <r> cols <c>` (l is one
// based) followed by r lines of c row-major values.
void write_weight_snapshot(std::ostream& out, const Network& network);
void write_weight_snapshot(std::ostream& out, std::span<const Matrix> layers);
std::vector<Matrix> read_weight_snapshot(std::istream& in);

}  // namespace sarbot::net
