#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nmn/core/layers.hpp"
#include "nmn/core/parameter_store.hpp"
#include "nmn/core/tape.hpp"
#include "nmn/models/architecture.hpp"

namespace nmn::models {

/// Scalar modulated activation: act((z.ws) * x + z.wb). Throws DimensionError
/// when the three vectors differ in length.
double nmn_activation(double x, std::span<const double> z, std::span<const double> w_s,
                      std::span<const double> w_b, core::Activation act);

/// Hidden state of every GRU layer of one network, for one episode.
struct RecurrentState {
  std::vector<std::vector<double>> hidden;
};

/// Node ids produced by recording one step on a tape. `gru` feeds the next
/// step's recurrent edges.
struct TapeStep {
  int output = -1;
  int signal = -1;  // z node for NMN, -1 for RNN
  std::vector<int> gru;
};

/// Actor or critic network: parameters plus wiring. Layer descriptors live in
/// a vector that is never resized after construction, so tapes may keep
/// pointers to them across moves of the Model.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t init_seed);
  /// Builds the wiring around existing parameters (e.g. from a checkpoint).
  Model(const ModelConfig& config, core::ParameterStore params);

  [[nodiscard]] const ModelConfig& config() const { return plan_.config; }
  [[nodiscard]] const ArchitecturePlan& plan() const { return plan_; }
  core::ParameterStore& params() { return params_; }
  [[nodiscard]] const core::ParameterStore& params() const { return params_; }
  [[nodiscard]] const std::vector<core::Layer>& layers() const { return layers_; }

  [[nodiscard]] bool is_nmn() const { return plan_.config.variant == Variant::NMN; }
  [[nodiscard]] std::size_t feedback_dim() const { return plan_.dims.feedback(); }
  [[nodiscard]] std::size_t obs_dim() const { return plan_.dims.obs; }
  [[nodiscard]] std::size_t output_dim() const { return plan_.output_width; }
  /// |z| for NMN, 0 for RNN.
  [[nodiscard]] std::size_t signal_dim() const;
  /// Indices into layers() of the modulated layers (empty for RNN).
  [[nodiscard]] std::vector<std::size_t> neuromod_layers() const;

  [[nodiscard]] RecurrentState initial_state() const;

  /// No-gradient step. Writes output_dim() values to `out` and, for NMN, the
  /// emitted signal to `z_out` when non-null. A non-null `z_override` replaces
  /// the signal fed to the main network while the recurrent state still
  /// advances. Throws NumericError naming the first non-finite layer.
  void step(std::span<const double> feedback, std::span<const double> obs, RecurrentState& state,
            std::span<double> out, std::span<double> z_out = {},
            std::span<const double> z_override = {}) const;

  /// Records one step on `tape` (bound to params()). `prev` is null at t = 0.
  TapeStep record_step(core::Tape& tape, std::span<const double> feedback,
                       std::span<const double> obs, const TapeStep* prev, std::size_t t) const;

  /// Per-neuron scale factors z.ws_i and offsets z.wb_i of a modulated layer.
  void modulation_factors(std::size_t layer_index, std::span<const double> z,
                          std::vector<double>& scale, std::vector<double>& offset) const;

 private:
  void build();

  ArchitecturePlan plan_;
  core::ParameterStore params_;
  std::vector<core::Layer> layers_;
  std::size_t n_history_ = 0;  // layers_[0, n_history_) form the history stack
  std::size_t n_gru_ = 0;
  std::size_t max_width_ = 0;
};

}  // namespace nmn::models
