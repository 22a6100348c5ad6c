#pragma once

#include <cmath>
#include <random>

namespace nmn::core {

namespace detail {
template <class Rng>
void glorot_fill(Array& a, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : a.flat()) {
    v = dist(rng);
  }
}
}  // namespace detail

template <class Rng>
void init_layer(ParameterStore& p, const Layer& layer, Rng& rng) {
  if (const auto* d = std::get_if<DenseLayer>(&layer)) {
    detail::glorot_fill(p.value(d->weight), d->in, d->out, rng);
    p.value(d->bias).fill(0.0);
  } else if (const auto* g = std::get_if<GruLayer>(&layer)) {
    detail::glorot_fill(p.value(g->weight), g->in, g->hidden, rng);
    detail::glorot_fill(p.value(g->recurrent), g->hidden, g->hidden, rng);
    p.value(g->bias).fill(0.0);
  } else if (const auto* n = std::get_if<NeuromodDenseLayer>(&layer)) {
    detail::glorot_fill(p.value(n->weight), n->in, n->out, rng);
    detail::glorot_fill(p.value(n->scale), n->k, n->out, rng);
    detail::glorot_fill(p.value(n->offset), n->k, n->out, rng);
  }
}

}  // namespace nmn::core
