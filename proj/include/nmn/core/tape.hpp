#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nmn/core/layers.hpp"
#include "nmn/core/parameter_store.hpp"

namespace nmn::core {

enum class OpKind { Input, Dense, Gru, Neuromod };

struct TapeNode {
  OpKind op = OpKind::Input;
  const Layer* layer = nullptr;
  int in0 = -1;  // x
  int in1 = -1;  // previous hidden state (GRU, -1 = zero state) or z (neuromod)
  std::size_t value_offset = 0;
  std::size_t value_size = 0;
  std::size_t saved_offset = 0;
  std::size_t step = 0;
};

/// Records layer applications for one update phase and replays them in
/// reverse. Nodes are appended in topological order, so backward walks the
/// node list from the end. Storage is arena-backed; clear() keeps capacity.
///
/// Recurrent edges are truncated in aligned windows of T steps: the gradient
/// flows from a GRU node at step s to its predecessor at step s' only when
/// s / T == s' / T.
class Tape {
 public:
  Tape() = default;
  explicit Tape(const ParameterStore& store) : store_(&store) {}

  void bind(const ParameterStore& store) { store_ = &store; }
  void clear();

  int input(std::span<const double> values, std::size_t step);
  int dense(const Layer& layer, int x, std::size_t step);
  int gru(const Layer& layer, int x, int h_prev, std::size_t step);
  int neuromod(const Layer& layer, int x, int z, std::size_t step);

  [[nodiscard]] std::span<const double> value(int node) const;
  /// Adjoint buffer of a node; write into it to seed the backward pass.
  std::span<double> adjoint(int node);
  [[nodiscard]] std::span<const double> adjoint(int node) const;
  [[nodiscard]] const TapeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] bool consumed() const { return consumed_; }

  /// Accumulates d(seeded adjoints)/d(params) into grads. Throws StateError
  /// if the tape was already consumed, ContractError when truncation_T = 0.
  void backward(GradientSet& grads, std::size_t truncation_T);

  /// Seeds d loss / d loss = 1 on a scalar node and runs backward.
  void backward_from(int loss_node, GradientSet& grads, std::size_t truncation_T);

 private:
  int push(OpKind op, const Layer* layer, int in0, int in1, std::size_t out, std::size_t saved,
           std::size_t step);
  const double* zeros(std::size_t n);

  const ParameterStore* store_ = nullptr;
  std::vector<TapeNode> nodes_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
  std::vector<double> saved_;
  std::vector<double> zeros_;
  bool consumed_ = false;
};

}  // namespace nmn::core
