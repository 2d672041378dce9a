#ifndef ADVDRIVE_MLP_HPP_
#define ADVDRIVE_MLP_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "advdrive/rng.hpp"

namespace advdrive {

// Intermediates cached by Mlp::forward. Valid only for the parameter
// version it was recorded against.
struct GradientTape {
  std::uint64_t version = 0;
  // activations[0] is the input, activations[l + 1] the output of layer l.
  std::vector<std::vector<double>> activations;
};

// Fully connected network: tanh on hidden layers, identity output.
// Parameters live in one flat vector, layer by layer, each layer as a
// row-major (out x in) weight block followed by its bias.
class Mlp {
 public:
  Mlp() = default;

  // All parameters zero. Throws std::invalid_argument on fewer than two
  // dims or a non-positive dim.
  explicit Mlp(std::vector<int> layer_dims);

  // Scaled uniform init: each weight ~ U(-b, b), b = gain * sqrt(3 / fan_in),
  // so rows have the norm an orthogonal init with that gain would give.
  static Mlp initialized(std::vector<int> layer_dims, Rng& rng,
                         double hidden_gain, double output_gain);

  const std::vector<int>& layer_dims() const { return dims_; }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  int input_size() const { return dims_.front(); }
  int output_size() const { return dims_.back(); }
  std::size_t num_params() const { return params_.size(); }

  std::span<const double> params() const { return params_; }
  // Any mutable access invalidates outstanding tapes.
  std::span<double> mutable_params();

  std::span<const double> weights(int layer) const;
  std::span<const double> biases(int layer) const;
  std::span<double> mutable_weights(int layer);
  std::span<double> mutable_biases(int layer);

  std::vector<double> forward(std::span<const double> input) const;
  std::vector<double> forward(std::span<const double> input,
                              GradientTape& tape) const;

  // Gradient of dot(output, output_grad) with respect to the parameters,
  // added into `param_grads` (size num_params()).
  void accumulate_param_grads(const GradientTape& tape,
                              std::span<const double> output_grad,
                              std::span<double> param_grads) const;

  std::vector<double> backward_params(const GradientTape& tape,
                                      std::span<const double> output_grad) const;

  // Gradient of dot(output, output_grad) with respect to the input.
  std::vector<double> backward_input(const GradientTape& tape,
                                     std::span<const double> output_grad) const;

  std::uint64_t version() const { return version_; }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.dims_ == b.dims_ && a.params_ == b.params_;
  }

 private:
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const;
  void check_tape(const GradientTape& tape,
                  std::span<const double> output_grad) const;
  // Back-propagates output_grad; calls sink(layer, delta) for each layer
  // from last to first and returns the input gradient when wanted.
  template <typename Sink>
  std::vector<double> backprop(const GradientTape& tape,
                               std::span<const double> output_grad,
                               Sink&& sink, bool want_input) const;
  void touch();

  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::uint64_t version_ = 0;
};

struct AdamState {
  AdamState() = default;
  AdamState(std::size_t size, double lr)
      : m(size, 0.0), v(size, 0.0), learning_rate(lr) {}

  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update in place. Throws std::invalid_argument when
// the three sizes disagree.
void adam_update(std::span<double> params, std::span<const double> grads,
                 AdamState& state);
void adam_step(Mlp& net, std::span<const double> grads, AdamState& state);

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json mlp_to_json(const Mlp& net);
// Throws std::runtime_error on a malformed document.
Mlp mlp_from_json(const nlohmann::json& doc);

}  // namespace advdrive

#endif  // ADVDRIVE_MLP_HPP_
