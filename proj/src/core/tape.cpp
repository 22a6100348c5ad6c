#include "nmn/core/tape.hpp"

#include <algorithm>
#include <string>

#include "nmn/core/errors.hpp"

namespace nmn::core {

void Tape::clear() {
  nodes_.clear();
  values_.clear();
  adjoints_.clear();
  saved_.clear();
  consumed_ = false;
}

int Tape::push(OpKind op, const Layer* layer, int in0, int in1, std::size_t out,
               std::size_t saved, std::size_t step) {
  if (consumed_) {
    throw StateError("tape: cannot record on a consumed tape; call clear() first");
  }
  TapeNode n;
  n.op = op;
  n.layer = layer;
  n.in0 = in0;
  n.in1 = in1;
  n.value_offset = values_.size();
  n.value_size = out;
  n.saved_offset = saved_.size();
  n.step = step;
  values_.resize(values_.size() + out);
  adjoints_.resize(adjoints_.size() + out, 0.0);
  saved_.resize(saved_.size() + saved);
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size() - 1);
}

const double* Tape::zeros(std::size_t n) {
  if (zeros_.size() < n) {
    zeros_.assign(n, 0.0);
  }
  return zeros_.data();
}

int Tape::input(std::span<const double> values, std::size_t step) {
  const int id = push(OpKind::Input, nullptr, -1, -1, values.size(), 0, step);
  std::copy(values.begin(), values.end(), values_.begin() + nodes_.back().value_offset);
  return id;
}

int Tape::dense(const Layer& layer, int x, std::size_t step) {
  const auto& l = std::get<DenseLayer>(layer);
  if (value(x).size() != l.in) {
    throw DimensionError("tape: input width does not match layer '" + l.name + "'");
  }
  const int id = push(OpKind::Dense, &layer, x, -1, l.out, l.out, step);
  const auto& n = nodes_.back();
  dense_forward(*store_, l, values_.data() + nodes_[x].value_offset, saved_.data() + n.saved_offset,
                values_.data() + n.value_offset);
  return id;
}

int Tape::gru(const Layer& layer, int x, int h_prev, std::size_t step) {
  const auto& l = std::get<GruLayer>(layer);
  if (value(x).size() != l.in || (h_prev >= 0 && value(h_prev).size() != l.hidden)) {
    throw DimensionError("tape: input/state width does not match layer '" + l.name + "'");
  }
  const double* h0 = zeros(l.hidden);
  const int id = push(OpKind::Gru, &layer, x, h_prev, l.hidden, 4 * l.hidden, step);
  const auto& n = nodes_.back();
  const double* h = h_prev >= 0 ? values_.data() + nodes_[h_prev].value_offset : h0;
  gru_forward(*store_, l, values_.data() + nodes_[x].value_offset, h,
              saved_.data() + n.saved_offset, values_.data() + n.value_offset);
  return id;
}

int Tape::neuromod(const Layer& layer, int x, int z, std::size_t step) {
  const auto& l = std::get<NeuromodDenseLayer>(layer);
  if (value(x).size() != l.in || value(z).size() != l.k) {
    throw DimensionError("tape: input/signal width does not match layer '" + l.name + "'");
  }
  const int id = push(OpKind::Neuromod, &layer, x, z, l.out, 3 * l.out, step);
  const auto& n = nodes_.back();
  neuromod_forward(*store_, l, values_.data() + nodes_[x].value_offset,
                   values_.data() + nodes_[z].value_offset, saved_.data() + n.saved_offset,
                   values_.data() + n.value_offset);
  return id;
}

std::span<const double> Tape::value(int node) const {
  const auto& n = nodes_.at(static_cast<std::size_t>(node));
  return {values_.data() + n.value_offset, n.value_size};
}

std::span<double> Tape::adjoint(int node) {
  const auto& n = nodes_.at(static_cast<std::size_t>(node));
  return {adjoints_.data() + n.value_offset, n.value_size};
}

std::span<const double> Tape::adjoint(int node) const {
  const auto& n = nodes_.at(static_cast<std::size_t>(node));
  return {adjoints_.data() + n.value_offset, n.value_size};
}

void Tape::backward(GradientSet& grads, std::size_t truncation_T) {
  if (consumed_) {
    throw StateError("tape: backward called twice on the same recording");
  }
  if (truncation_T == 0) {
    throw ContractError("tape: truncation window must be positive");
  }
  if (!grads.aligned_with(*store_)) {
    throw DimensionError("tape: gradient set is not aligned with the parameter store");
  }
  consumed_ = true;
  const double* v = values_.data();
  double* adj = adjoints_.data();
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const TapeNode& n = nodes_[i];
    if (n.op == OpKind::Input) {
      continue;
    }
    const double* dy = adj + n.value_offset;
    if (std::all_of(dy, dy + n.value_size, [](double d) { return d == 0.0; })) {
      continue;
    }
    const TapeNode& x = nodes_[n.in0];
    const double* s = saved_.data() + n.saved_offset;
    switch (n.op) {
      case OpKind::Dense:
        dense_backward(*store_, std::get<DenseLayer>(*n.layer), v + x.value_offset, s, dy, &grads,
                       adj + x.value_offset);
        break;
      case OpKind::Gru: {
        const auto& l = std::get<GruLayer>(*n.layer);
        const double* h = zeros(l.hidden);
        double* dh = nullptr;
        if (n.in1 >= 0) {
          const TapeNode& prev = nodes_[n.in1];
          h = v + prev.value_offset;
          if (n.step / truncation_T == prev.step / truncation_T) {
            dh = adj + prev.value_offset;
          }
        }
        gru_backward(*store_, l, v + x.value_offset, h, s, dy, &grads, adj + x.value_offset, dh);
        break;
      }
      case OpKind::Neuromod: {
        const TapeNode& z = nodes_[n.in1];
        neuromod_backward(*store_, std::get<NeuromodDenseLayer>(*n.layer), v + x.value_offset,
                          v + z.value_offset, s, dy, &grads, adj + x.value_offset,
                          adj + z.value_offset);
        break;
      }
      case OpKind::Input:
        break;
    }
  }
}

void Tape::backward_from(int loss_node, GradientSet& grads, std::size_t truncation_T) {
  auto a = adjoint(loss_node);
  if (a.size() != 1) {
    throw DimensionError("tape: loss node must be scalar");
  }
  a[0] += 1.0;
  backward(grads, truncation_T);
}

}  // namespace nmn::core
