#include "nmn/core/layers.hpp"

#include <algorithm>
#include <cmath>

#include "nmn/core/errors.hpp"

namespace nmn::core {

namespace {

// Per-thread scratch so the kernels never allocate on the hot path.
std::vector<double>& scratch(std::size_t slot, std::size_t n) {
  thread_local std::vector<double> buffers[3];
  auto& b = buffers[slot];
  if (b.size() < n) {
    b.resize(n);
  }
  return b;
}

}  // namespace

DenseLayer add_dense(ParameterStore& store, const std::string& name, std::size_t in,
                     std::size_t out, Activation act) {
  DenseLayer l{name, in, out, act, 0, 0};
  l.weight = store.add(name + ".weight", out, in);
  l.bias = store.add(name + ".bias", out, 1);
  return l;
}

GruLayer add_gru(ParameterStore& store, const std::string& name, std::size_t in,
                 std::size_t hidden) {
  GruLayer l{name, in, hidden, 0, 0, 0};
  l.weight = store.add(name + ".weight", 3 * hidden, in);
  l.recurrent = store.add(name + ".recurrent", 3 * hidden, hidden);
  l.bias = store.add(name + ".bias", 3 * hidden, 1);
  return l;
}

NeuromodDenseLayer add_neuromod(ParameterStore& store, const std::string& name, std::size_t in,
                                std::size_t out, std::size_t k, Activation act) {
  NeuromodDenseLayer l{name, in, out, k, act, 0, 0, 0};
  l.weight = store.add(name + ".weight", out, in);
  l.scale = store.add(name + ".scale", out, k);
  l.offset = store.add(name + ".offset", out, k);
  return l;
}

std::size_t saved_size(const Layer& layer) {
  return std::visit(
      [](const auto& l) -> std::size_t {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, DenseLayer>) {
          return l.out;
        } else if constexpr (std::is_same_v<T, GruLayer>) {
          return 4 * l.hidden;
        } else {
          return 3 * l.out;
        }
      },
      layer);
}

std::size_t output_size(const Layer& layer) {
  return std::visit(
      [](const auto& l) -> std::size_t {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, GruLayer>) {
          return l.hidden;
        } else {
          return l.out;
        }
      },
      layer);
}

void dense_forward(const ParameterStore& p, const DenseLayer& l, const double* x, double* pre,
                   double* y) {
  const double* w = p.value(l.weight).data();
  const double* b = p.value(l.bias).data();
  matvec(w, l.out, l.in, x, pre);
  for (std::size_t i = 0; i < l.out; ++i) {
    pre[i] += b[i];
    y[i] = activation_apply(pre[i], l.act);
  }
}

void dense_backward(const ParameterStore& p, const DenseLayer& l, const double* x,
                    const double* pre, const double* dy, GradientSet* g, double* dx) {
  auto& du = scratch(0, l.out);
  for (std::size_t i = 0; i < l.out; ++i) {
    du[i] = dy[i] * activation_derivative(pre[i], l.act);
  }
  if (g != nullptr) {
    outer_acc(du.data(), l.out, x, l.in, (*g)[l.weight].data());
    axpy(1.0, du.data(), (*g)[l.bias].data(), l.out);
  }
  if (dx != nullptr) {
    matvec_t_acc(p.value(l.weight).data(), l.out, l.in, du.data(), dx);
  }
}

void gru_forward(const ParameterStore& p, const GruLayer& l, const double* x, const double* h,
                 double* saved, double* h_next) {
  const std::size_t n_h = l.hidden;
  const double* w = p.value(l.weight).data();
  const double* u = p.value(l.recurrent).data();
  const double* b = p.value(l.bias).data();
  double* z = saved;
  double* r = saved + n_h;
  double* n = saved + 2 * n_h;
  double* rh = saved + 3 * n_h;

  auto& a = scratch(0, 3 * n_h);
  matvec(w, 3 * n_h, l.in, x, a.data());
  for (std::size_t i = 0; i < 2 * n_h; ++i) {
    a[i] += dot(u + i * n_h, h, n_h) + b[i];
  }
  for (std::size_t i = 0; i < n_h; ++i) {
    z[i] = sigmoid(a[i]);
    r[i] = sigmoid(a[n_h + i]);
    rh[i] = r[i] * h[i];
  }
  const double* un = u + 2 * n_h * n_h;
  for (std::size_t i = 0; i < n_h; ++i) {
    n[i] = std::tanh(a[2 * n_h + i] + dot(un + i * n_h, rh, n_h) + b[2 * n_h + i]);
    h_next[i] = (1.0 - z[i]) * h[i] + z[i] * n[i];
  }
}

void gru_backward(const ParameterStore& p, const GruLayer& l, const double* x, const double* h,
                  const double* saved, const double* dh_next, GradientSet* g, double* dx,
                  double* dh) {
  const std::size_t n_h = l.hidden;
  const double* w = p.value(l.weight).data();
  const double* u = p.value(l.recurrent).data();
  const double* z = saved;
  const double* r = saved + n_h;
  const double* n = saved + 2 * n_h;
  const double* rh = saved + 3 * n_h;

  auto& da = scratch(0, 3 * n_h);  // [da_z; da_r; da_n]
  auto& drh = scratch(1, n_h);
  double* da_z = da.data();
  double* da_r = da.data() + n_h;
  double* da_n = da.data() + 2 * n_h;

  for (std::size_t i = 0; i < n_h; ++i) {
    const double dn = dh_next[i] * z[i];
    da_n[i] = dn * (1.0 - n[i] * n[i]);
    const double dz = dh_next[i] * (n[i] - h[i]);
    da_z[i] = dz * z[i] * (1.0 - z[i]);
  }
  const double* un = u + 2 * n_h * n_h;
  std::fill_n(drh.data(), n_h, 0.0);
  matvec_t_acc(un, n_h, n_h, da_n, drh.data());
  for (std::size_t i = 0; i < n_h; ++i) {
    const double dr = drh[i] * h[i];
    da_r[i] = dr * r[i] * (1.0 - r[i]);
  }

  if (g != nullptr) {
    outer_acc(da.data(), 3 * n_h, x, l.in, (*g)[l.weight].data());
    double* gu = (*g)[l.recurrent].data();
    outer_acc(da.data(), 2 * n_h, h, n_h, gu);
    outer_acc(da_n, n_h, rh, n_h, gu + 2 * n_h * n_h);
    axpy(1.0, da.data(), (*g)[l.bias].data(), 3 * n_h);
  }
  if (dx != nullptr) {
    matvec_t_acc(w, 3 * n_h, l.in, da.data(), dx);
  }
  if (dh != nullptr) {
    for (std::size_t i = 0; i < n_h; ++i) {
      dh[i] += dh_next[i] * (1.0 - z[i]) + drh[i] * r[i];
    }
    matvec_t_acc(u, 2 * n_h, n_h, da.data(), dh);
  }
}

void neuromod_forward(const ParameterStore& p, const NeuromodDenseLayer& l, const double* x,
                      const double* z, double* saved, double* y) {
  const double* w = p.value(l.weight).data();
  const double* ws = p.value(l.scale).data();
  const double* wb = p.value(l.offset).data();
  double* pre = saved;
  double* s = saved + l.out;
  double* act_in = saved + 2 * l.out;
  matvec(w, l.out, l.in, x, pre);
  for (std::size_t i = 0; i < l.out; ++i) {
    s[i] = dot(z, ws + i * l.k, l.k);
    act_in[i] = s[i] * pre[i] + dot(z, wb + i * l.k, l.k);
    y[i] = activation_apply(act_in[i], l.act);
  }
}

void neuromod_backward(const ParameterStore& p, const NeuromodDenseLayer& l, const double* x,
                       const double* z, const double* saved, const double* dy, GradientSet* g,
                       double* dx, double* dz) {
  const double* ws = p.value(l.scale).data();
  const double* wb = p.value(l.offset).data();
  const double* pre = saved;
  const double* s = saved + l.out;
  const double* act_in = saved + 2 * l.out;

  auto& du = scratch(0, l.out);
  auto& dpre = scratch(1, l.out);
  auto& ds = scratch(2, l.out);
  for (std::size_t i = 0; i < l.out; ++i) {
    du[i] = dy[i] * activation_derivative(act_in[i], l.act);
    dpre[i] = du[i] * s[i];
    ds[i] = du[i] * pre[i];
  }
  if (g != nullptr) {
    outer_acc(dpre.data(), l.out, x, l.in, (*g)[l.weight].data());
    outer_acc(ds.data(), l.out, z, l.k, (*g)[l.scale].data());
    outer_acc(du.data(), l.out, z, l.k, (*g)[l.offset].data());
  }
  if (dx != nullptr) {
    matvec_t_acc(p.value(l.weight).data(), l.out, l.in, dpre.data(), dx);
  }
  if (dz != nullptr) {
    matvec_t_acc(ws, l.out, l.k, ds.data(), dz);
    matvec_t_acc(wb, l.out, l.k, du.data(), dz);
  }
}

std::vector<double> dense_apply(std::span<const double> input, const Array& weights,
                                std::span<const double> bias, Activation act) {
  if (weights.cols() != input.size() || weights.rows() != bias.size()) {
    throw DimensionError("dense_apply: weights must be (out x in) with in = |input|, out = |bias|");
  }
  if (!all_finite(input) || !all_finite(weights.flat()) || !all_finite(bias)) {
    throw NumericError("dense_apply: non-finite input");
  }
  std::vector<double> y(weights.rows());
  matvec(weights.data(), weights.rows(), weights.cols(), input.data(), y.data());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = activation_apply(y[i] + bias[i], act);
  }
  return y;
}

GruStepResult gru_step(std::span<const double> input, std::span<const double> state,
                       const ParameterStore& p, const GruLayer& l) {
  if (input.size() != l.in || state.size() != l.hidden) {
    throw DimensionError("gru_step: input/state sizes do not match layer '" + l.name + "'");
  }
  std::vector<double> saved(4 * l.hidden);
  GruStepResult out;
  out.next_state.resize(l.hidden);
  gru_forward(p, l, input.data(), state.data(), saved.data(), out.next_state.data());
  out.output = out.next_state;
  return out;
}

}  // namespace nmn::core
