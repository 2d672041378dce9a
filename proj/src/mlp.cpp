#include "advdrive/mlp.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

namespace advdrive {

namespace {

std::atomic<std::uint64_t> g_next_version{1};

}  // namespace

Mlp::Mlp(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) {
    throw std::invalid_argument("Mlp needs at least input and output dims");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    if (dims_[l] <= 0 || dims_[l + 1] <= 0) {
      throw std::invalid_argument("Mlp layer dims must be positive");
    }
    offsets_.push_back(total);
    total += static_cast<std::size_t>(dims_[l + 1]) * (dims_[l] + 1);
  }
  params_.assign(total, 0.0);
  touch();
}

Mlp Mlp::initialized(std::vector<int> layer_dims, Rng& rng,
                     double hidden_gain, double output_gain) {
  Mlp net(std::move(layer_dims));
  for (int l = 0; l < net.num_layers(); ++l) {
    const double gain = l + 1 == net.num_layers() ? output_gain : hidden_gain;
    const double bound = gain * std::sqrt(3.0 / net.dims_[l]);
    for (double& w : net.mutable_weights(l)) w = uniform(rng, -bound, bound);
  }
  return net;
}

void Mlp::touch() { version_ = g_next_version.fetch_add(1); }

std::span<double> Mlp::mutable_params() {
  touch();
  return params_;
}

std::size_t Mlp::bias_offset(int layer) const {
  return offsets_[layer] +
         static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer];
}

std::span<const double> Mlp::weights(int layer) const {
  return std::span<const double>(params_).subspan(
      weight_offset(layer),
      static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer]);
}

std::span<const double> Mlp::biases(int layer) const {
  return std::span<const double>(params_).subspan(bias_offset(layer),
                                                  dims_[layer + 1]);
}

std::span<double> Mlp::mutable_weights(int layer) {
  touch();
  return std::span<double>(params_).subspan(
      weight_offset(layer),
      static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer]);
}

std::span<double> Mlp::mutable_biases(int layer) {
  touch();
  return std::span<double>(params_).subspan(bias_offset(layer),
                                            dims_[layer + 1]);
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  GradientTape tape;
  return forward(input, tape);
}

std::vector<double> Mlp::forward(std::span<const double> input,
                                 GradientTape& tape) const {
  if (static_cast<int>(input.size()) != input_size()) {
    throw std::invalid_argument("Mlp::forward: expected input of size " +
                                std::to_string(input_size()) + ", got " +
                                std::to_string(input.size()));
  }
  tape.version = version_;
  tape.activations.resize(dims_.size());
  tape.activations[0].assign(input.begin(), input.end());
  for (int l = 0; l < num_layers(); ++l) {
    const int in = dims_[l];
    const int out = dims_[l + 1];
    const std::vector<double>& x = tape.activations[l];
    std::vector<double>& y = tape.activations[l + 1];
    y.assign(out, 0.0);
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const bool hidden = l + 1 < num_layers();
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = hidden ? std::tanh(acc) : acc;
    }
  }
  return tape.activations.back();
}

void Mlp::check_tape(const GradientTape& tape,
                     std::span<const double> output_grad) const {
  if (tape.version != version_ || tape.activations.size() != dims_.size()) {
    throw std::logic_error("stale gradient tape: parameters changed since "
                           "the forward pass");
  }
  if (static_cast<int>(output_grad.size()) != output_size()) {
    throw std::invalid_argument("Mlp backward: output_grad has wrong size");
  }
}

template <typename Sink>
std::vector<double> Mlp::backprop(const GradientTape& tape,
                                  std::span<const double> output_grad,
                                  Sink&& sink, bool want_input) const {
  check_tape(tape, output_grad);
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> prev;
  for (int l = num_layers() - 1; l >= 0; --l) {
    sink(l, delta);
    if (l == 0 && !want_input) break;
    const int in = dims_[l];
    const int out = dims_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    prev.assign(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += row[i] * d;
    }
    if (l > 0) {
      // Layer l's input is the tanh output of layer l - 1.
      const std::vector<double>& a = tape.activations[l];
      for (int i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];
    }
    delta.swap(prev);
  }
  return want_input ? delta : std::vector<double>{};
}

void Mlp::accumulate_param_grads(const GradientTape& tape,
                                 std::span<const double> output_grad,
                                 std::span<double> param_grads) const {
  if (param_grads.size() != params_.size()) {
    throw std::invalid_argument("accumulate_param_grads: size mismatch");
  }
  backprop(
      tape, output_grad,
      [&](int l, const std::vector<double>& delta) {
        const int in = dims_[l];
        const std::vector<double>& x = tape.activations[l];
        double* gw = param_grads.data() + weight_offset(l);
        double* gb = param_grads.data() + bias_offset(l);
        for (int o = 0; o < dims_[l + 1]; ++o) {
          const double d = delta[o];
          gb[o] += d;
          if (d == 0.0) continue;
          double* row = gw + static_cast<std::size_t>(o) * in;
          for (int i = 0; i < in; ++i) row[i] += d * x[i];
        }
      },
      false);
}

std::vector<double> Mlp::backward_params(
    const GradientTape& tape, std::span<const double> output_grad) const {
  std::vector<double> grads(params_.size(), 0.0);
  accumulate_param_grads(tape, output_grad, grads);
  return grads;
}

std::vector<double> Mlp::backward_input(
    const GradientTape& tape, std::span<const double> output_grad) const {
  return backprop(
      tape, output_grad, [](int, const std::vector<double>&) {}, true);
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam_update: parameter/gradient/state "
                                "sizes disagree");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void adam_step(Mlp& net, std::span<const double> grads, AdamState& state) {
  adam_update(net.mutable_params(), grads, state);
}

nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["layer_dims"] = net.layer_dims();
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    auto w = net.weights(l);
    auto b = net.biases(l);
    weights.push_back(std::vector<double>(w.begin(), w.end()));
    biases.push_back(std::vector<double>(b.begin(), b.end()));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  return doc;
}

Mlp mlp_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw std::runtime_error("unsupported checkpoint format_version");
    }
    Mlp net(doc.at("layer_dims").get<std::vector<int>>());
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (static_cast<int>(weights.size()) != net.num_layers() ||
        static_cast<int>(biases.size()) != net.num_layers()) {
      throw std::runtime_error("layer count does not match layer_dims");
    }
    for (int l = 0; l < net.num_layers(); ++l) {
      const auto w = weights[l].get<std::vector<double>>();
      const auto b = biases[l].get<std::vector<double>>();
      auto dst_w = net.mutable_weights(l);
      auto dst_b = net.mutable_biases(l);
      if (w.size() != dst_w.size() || b.size() != dst_b.size()) {
        throw std::runtime_error("layer " + std::to_string(l) +
                                 " has the wrong number of parameters");
      }
      std::copy(w.begin(), w.end(), dst_w.begin());
      std::copy(b.begin(), b.end(), dst_b.begin());
    }
    for (double p : net.params()) {
      if (!std::isfinite(p)) throw std::runtime_error("non-finite parameter");
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed network document: ") +
                             e.what());
  }
}

}  // namespace advdrive
