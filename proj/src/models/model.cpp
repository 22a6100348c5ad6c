#include "nmn/models/model.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "nmn/core/errors.hpp"

namespace nmn::models {

using core::Layer;
using Kind = LayerSpec::Kind;

double nmn_activation(double x, std::span<const double> z, std::span<const double> w_s,
                      std::span<const double> w_b, core::Activation act) {
  if (z.size() != w_s.size() || z.size() != w_b.size()) {
    throw DimensionError("nmn_activation: z, w_s and w_b must have equal length");
  }
  const double scale = core::dot(z.data(), w_s.data(), z.size());
  const double offset = core::dot(z.data(), w_b.data(), z.size());
  return core::activation_apply(scale * x + offset, act);
}

Model::Model(const ModelConfig& config, std::uint64_t init_seed) : plan_(plan_architecture(config)) {
  build();
  std::mt19937_64 rng(init_seed);
  for (const auto& l : layers_) {
    core::init_layer(params_, l, rng);
  }
}

Model::Model(const ModelConfig& config, core::ParameterStore params)
    : plan_(plan_architecture(config)) {
  build();
  if (params.size() != params_.size()) {
    throw ConfigError("model: parameter set does not match the architecture");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& want = params_.entry(i);
    const auto& got = params.entry(i);
    if (want.name != got.name || !want.value.same_shape(got.value)) {
      throw ConfigError(fmt::format("model: parameter '{}' does not match '{}' ({}x{})", got.name,
                                    want.name, want.value.rows(), want.value.cols()));
    }
  }
  params_ = std::move(params);
}

void Model::build() {
  const bool nmn = is_nmn();
  std::size_t in = nmn ? plan_.dims.feedback() : plan_.dims.feedback() + plan_.dims.obs;
  layers_.reserve(plan_.history.size() + plan_.main.size());
  std::size_t gru_i = 0;
  std::size_t dense_i = 0;
  auto add = [&](const LayerSpec& s, std::size_t k, const std::string& prefix) {
    switch (s.kind) {
      case Kind::Gru:
        layers_.emplace_back(core::add_gru(params_, fmt::format("gru{}", gru_i++), in, s.width));
        ++n_gru_;
        break;
      case Kind::Dense:
        layers_.emplace_back(
            core::add_dense(params_, fmt::format("{}{}", prefix, dense_i++), in, s.width, s.act));
        break;
      case Kind::Neuromod:
        layers_.emplace_back(core::add_neuromod(params_, fmt::format("{}{}", prefix, dense_i++),
                                                in, s.width, k, s.act));
        break;
    }
    max_width_ = std::max({max_width_, s.width, in});
    in = s.width;
  };
  for (const auto& s : plan_.history) {
    add(s, 0, nmn ? "nm_dense" : "dense");
  }
  n_history_ = layers_.size();
  const std::size_t k = plan_.history.back().width;
  if (nmn) {
    in = plan_.dims.obs;
    dense_i = 0;
  }
  for (const auto& s : plan_.main) {
    add(s, k, nmn ? "main" : "dense");
  }
}

std::size_t Model::signal_dim() const { return is_nmn() ? plan_.history.back().width : 0; }

std::vector<std::size_t> Model::neuromod_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (std::holds_alternative<core::NeuromodDenseLayer>(layers_[i])) {
      out.push_back(i);
    }
  }
  return out;
}

RecurrentState Model::initial_state() const {
  RecurrentState s;
  for (std::size_t i = 0; i < n_gru_; ++i) {
    s.hidden.emplace_back(std::get<core::GruLayer>(layers_[i]).hidden, 0.0);
  }
  return s;
}

namespace {

struct StepScratch {
  std::vector<double> a, b, saved, input, signal;
  void ensure(std::size_t n) {
    if (a.size() < n) {
      a.resize(n);
      b.resize(n);
      saved.resize(4 * n);
      input.resize(n);
      signal.resize(n);
    }
  }
};

void check_finite(const double* v, std::size_t n, const Layer& l) {
  if (!core::all_finite({v, n})) {
    const auto& name = std::visit([](const auto& x) -> const std::string& { return x.name; }, l);
    throw NumericError(fmt::format("non-finite activation in layer '{}'", name));
  }
}

}  // namespace

void Model::step(std::span<const double> feedback, std::span<const double> obs,
                 RecurrentState& state, std::span<double> out, std::span<double> z_out,
                 std::span<const double> z_override) const {
  if (feedback.size() != feedback_dim() || obs.size() != obs_dim() ||
      out.size() != output_dim() || state.hidden.size() != n_gru_) {
    throw DimensionError("model step: input, output or state size mismatch");
  }
  thread_local StepScratch s;
  s.ensure(max_width_ + feedback_dim() + obs_dim());
  const bool nmn = is_nmn();

  // History stack.
  std::size_t width = feedback.size();
  std::copy(feedback.begin(), feedback.end(), s.a.begin());
  if (!nmn) {
    std::copy(obs.begin(), obs.end(), s.a.begin() + static_cast<std::ptrdiff_t>(width));
    width += obs.size();
  }
  std::size_t gru_i = 0;
  for (std::size_t i = 0; i < n_history_; ++i) {
    const Layer& l = layers_[i];
    if (const auto* g = std::get_if<core::GruLayer>(&l)) {
      auto& h = state.hidden[gru_i++];
      core::gru_forward(params_, *g, s.a.data(), h.data(), s.saved.data(), s.b.data());
      check_finite(s.b.data(), g->hidden, l);
      std::copy_n(s.b.data(), g->hidden, h.begin());
      width = g->hidden;
    } else {
      const auto& d = std::get<core::DenseLayer>(l);
      core::dense_forward(params_, d, s.a.data(), s.saved.data(), s.b.data());
      check_finite(s.b.data(), d.out, l);
      width = d.out;
    }
    std::swap(s.a, s.b);
  }

  if (!nmn) {
    for (std::size_t i = n_history_; i < layers_.size(); ++i) {
      const auto& d = std::get<core::DenseLayer>(layers_[i]);
      core::dense_forward(params_, d, s.a.data(), s.saved.data(), s.b.data());
      check_finite(s.b.data(), d.out, layers_[i]);
      std::swap(s.a, s.b);
    }
    std::copy_n(s.a.data(), out.size(), out.begin());
    return;
  }

  const std::size_t k = width;
  std::copy_n(s.a.data(), k, s.signal.begin());
  if (!z_out.empty()) {
    if (z_out.size() != k) {
      throw DimensionError("model step: z_out has the wrong length");
    }
    std::copy_n(s.signal.data(), k, z_out.begin());
  }
  if (!z_override.empty()) {
    if (z_override.size() != k) {
      throw DimensionError("model step: z_override has the wrong length");
    }
    std::copy(z_override.begin(), z_override.end(), s.signal.begin());
  }
  std::copy(obs.begin(), obs.end(), s.a.begin());
  for (std::size_t i = n_history_; i < layers_.size(); ++i) {
    const auto& n = std::get<core::NeuromodDenseLayer>(layers_[i]);
    core::neuromod_forward(params_, n, s.a.data(), s.signal.data(), s.saved.data(), s.b.data());
    check_finite(s.b.data(), n.out, layers_[i]);
    std::swap(s.a, s.b);
  }
  std::copy_n(s.a.data(), out.size(), out.begin());
}

TapeStep Model::record_step(core::Tape& tape, std::span<const double> feedback,
                            std::span<const double> obs, const TapeStep* prev,
                            std::size_t t) const {
  if (feedback.size() != feedback_dim() || obs.size() != obs_dim()) {
    throw DimensionError("model record_step: input size mismatch");
  }
  const bool nmn = is_nmn();
  TapeStep out;
  int x = -1;
  if (nmn) {
    x = tape.input(feedback, t);
  } else {
    thread_local std::vector<double> joined;
    joined.assign(feedback.begin(), feedback.end());
    joined.insert(joined.end(), obs.begin(), obs.end());
    x = tape.input(joined, t);
  }
  std::size_t gru_i = 0;
  for (std::size_t i = 0; i < n_history_; ++i) {
    const Layer& l = layers_[i];
    if (std::holds_alternative<core::GruLayer>(l)) {
      const int h_prev = prev != nullptr ? prev->gru[gru_i] : -1;
      x = tape.gru(l, x, h_prev, t);
      out.gru.push_back(x);
      ++gru_i;
    } else {
      x = tape.dense(l, x, t);
    }
  }
  if (!nmn) {
    for (std::size_t i = n_history_; i < layers_.size(); ++i) {
      x = tape.dense(layers_[i], x, t);
    }
    out.output = x;
    return out;
  }
  out.signal = x;
  x = tape.input(obs, t);
  for (std::size_t i = n_history_; i < layers_.size(); ++i) {
    x = tape.neuromod(layers_[i], x, out.signal, t);
  }
  out.output = x;
  return out;
}

void Model::modulation_factors(std::size_t layer_index, std::span<const double> z,
                               std::vector<double>& scale, std::vector<double>& offset) const {
  const auto* n = std::get_if<core::NeuromodDenseLayer>(&layers_.at(layer_index));
  if (n == nullptr) {
    throw ConfigError(fmt::format("layer {} is not a modulated layer", layer_index));
  }
  if (z.size() != n->k) {
    throw DimensionError("modulation_factors: z has the wrong length");
  }
  const auto& ws = params_.value(n->scale);
  const auto& wb = params_.value(n->offset);
  scale.resize(n->out);
  offset.resize(n->out);
  for (std::size_t i = 0; i < n->out; ++i) {
    scale[i] = core::dot(z.data(), ws.data() + i * n->k, n->k);
    offset[i] = core::dot(z.data(), wb.data() + i * n->k, n->k);
  }
}

}  // namespace nmn::models
