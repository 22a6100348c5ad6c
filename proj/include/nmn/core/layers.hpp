#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nmn/core/activation.hpp"
#include "nmn/core/array.hpp"
#include "nmn/core/parameter_store.hpp"

namespace nmn::core {

// Layer descriptors hold indices into a ParameterStore; they own no numbers.

struct DenseLayer {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  Activation act = Activation::Identity;
  std::size_t weight = 0;  // (out x in)
  std::size_t bias = 0;    // (out x 1)
};

/// Standard gated recurrent unit:
///   z = sigmoid(Wz x + Uz h + bz), r = sigmoid(Wr x + Ur h + br),
///   n = tanh(Wn x + Un (r*h) + bn), h' = (1 - z) * h + z * n.
/// Gate blocks are stacked [z; r; n] in W (3H x in), U (3H x H), b (3H x 1).
struct GruLayer {
  std::string name;
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t weight = 0;
  std::size_t recurrent = 0;
  std::size_t bias = 0;
};

/// Dense layer whose activation is modulated by a context signal z of length k:
///   y_i = act( (z . ws_i) * (W_i . x) + z . wb_i ).
/// Carries no additive bias; the offset comes from z . wb_i.
struct NeuromodDenseLayer {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t k = 0;
  Activation act = Activation::Identity;
  std::size_t weight = 0;  // (out x in)
  std::size_t scale = 0;   // ws, (out x k)
  std::size_t offset = 0;  // wb, (out x k)
};

using Layer = std::variant<DenseLayer, GruLayer, NeuromodDenseLayer>;

DenseLayer add_dense(ParameterStore& store, const std::string& name, std::size_t in,
                     std::size_t out, Activation act);
GruLayer add_gru(ParameterStore& store, const std::string& name, std::size_t in,
                 std::size_t hidden);
NeuromodDenseLayer add_neuromod(ParameterStore& store, const std::string& name, std::size_t in,
                                std::size_t out, std::size_t k, Activation act);

/// Number of doubles a layer saves on the tape for its backward pass.
std::size_t saved_size(const Layer& layer);
std::size_t output_size(const Layer& layer);

// Raw kernels. Pointers must reference buffers of the documented sizes;
// gradient and input-adjoint outputs are accumulated, and may be null when
// not needed.

void dense_forward(const ParameterStore& p, const DenseLayer& l, const double* x, double* pre,
                   double* y);
void dense_backward(const ParameterStore& p, const DenseLayer& l, const double* x,
                    const double* pre, const double* dy, GradientSet* g, double* dx);

void gru_forward(const ParameterStore& p, const GruLayer& l, const double* x, const double* h,
                 double* saved, double* h_next);
void gru_backward(const ParameterStore& p, const GruLayer& l, const double* x, const double* h,
                  const double* saved, const double* dh_next, GradientSet* g, double* dx,
                  double* dh);

void neuromod_forward(const ParameterStore& p, const NeuromodDenseLayer& l, const double* x,
                      const double* z, double* saved, double* y);
void neuromod_backward(const ParameterStore& p, const NeuromodDenseLayer& l, const double* x,
                       const double* z, const double* saved, const double* dy, GradientSet* g,
                       double* dx, double* dz);

// Checked single-call forms.

/// activation(weights . input + bias). Throws DimensionError / NumericError.
std::vector<double> dense_apply(std::span<const double> input, const Array& weights,
                                std::span<const double> bias, Activation act);

struct GruStepResult {
  std::vector<double> output;
  std::vector<double> next_state;
};

/// One GRU step; the output equals the next hidden state.
GruStepResult gru_step(std::span<const double> input, std::span<const double> state,
                       const ParameterStore& p, const GruLayer& l);

/// Glorot-uniform weights, zero biases, for every array owned by `layer`.
template <class Rng>
void init_layer(ParameterStore& p, const Layer& layer, Rng& rng);

}  // namespace nmn::core

#include "nmn/core/layers_init.inl"
