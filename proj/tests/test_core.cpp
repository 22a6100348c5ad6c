#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nmn/core/activation.hpp"
#include "nmn/core/adam.hpp"
#include "nmn/core/errors.hpp"
#include "nmn/core/layers.hpp"
#include "nmn/core/parallel.hpp"
#include "nmn/core/parameter_store.hpp"
#include "nmn/core/tape.hpp"
#include "test_util.hpp"

using namespace nmn;
using namespace nmn::core;
using nmn::testing::central_diff;
using nmn::testing::fill_uniform;
using nmn::testing::rel_err;
using nmn::testing::uniform_vec;

TEST(Activation, SReluExamples) {
  EXPECT_DOUBLE_EQ(activation_apply(0.5, Activation::SReLU), 0.5);
  EXPECT_DOUBLE_EQ(activation_apply(2.0, Activation::SReLU), 1.0);
  EXPECT_DOUBLE_EQ(activation_apply(-3.0, Activation::SReLU), -1.0);
}

TEST(Activation, SReluKinkDerivativeIsOne) {
  EXPECT_DOUBLE_EQ(activation_derivative(1.0, Activation::SReLU), 1.0);
  EXPECT_DOUBLE_EQ(activation_derivative(-1.0, Activation::SReLU), 1.0);
  EXPECT_DOUBLE_EQ(activation_derivative(1.5, Activation::SReLU), 0.0);
}

TEST(Activation, UnknownNameIsConfigError) {
  EXPECT_THROW(parse_activation("swish"), ConfigError);
  EXPECT_EQ(parse_activation("srelu"), Activation::SReLU);
}

TEST(Dense, HandMatrixProduct) {
  const Array w(2, 2, std::vector<double>{2, 3, 0, 1});
  const auto y = dense_apply(std::vector<double>{1, 0}, w, std::vector<double>{0, 0}, Activation::Identity);
  EXPECT_EQ(y, (std::vector<double>{2, 0}));
}

TEST(Dense, SReluSaturates) {
  const Array w(1, 1, std::vector<double>{1});
  EXPECT_EQ(dense_apply(std::vector<double>{5}, w, std::vector<double>{0}, Activation::SReLU),
            std::vector<double>{1});
}

TEST(Dense, SigmoidValue) {
  const Array w(1, 1, std::vector<double>{1});
  const auto y = dense_apply(std::vector<double>{0.3}, w, std::vector<double>{0.2}, Activation::Sigmoid);
  // 1 / (1 + e^-0.5), evaluated independently.
  EXPECT_NEAR(y[0], 0.6224593312018546, 1e-15);
}

TEST(Dense, ShapeMismatchAndNonFinite) {
  const Array w(2, 2, std::vector<double>{1, 0, 0, 1});
  EXPECT_THROW(dense_apply(std::vector<double>{1}, w, std::vector<double>{0, 0}, Activation::Identity),
               DimensionError);
  EXPECT_THROW(dense_apply(std::vector<double>{1, 0}, w, std::vector<double>{0}, Activation::Identity),
               DimensionError);
  EXPECT_THROW(dense_apply(std::vector<double>{NAN, 0}, w, std::vector<double>{0, 0}, Activation::Identity),
               NumericError);
}

TEST(Gru, ZeroWeightsFixedPoint) {
  ParameterStore p;
  const auto l = add_gru(p, "g", 3, 4);
  const auto r = gru_step(std::vector<double>{0.7, -2.0, 5.0}, std::vector<double>(4, 0.0), p, l);
  for (double v : r.next_state) {
    EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(r.output, r.next_state);
}

TEST(Gru, Deterministic) {
  ParameterStore p;
  const auto l = add_gru(p, "g", 3, 5);
  std::mt19937_64 rng(3);
  fill_uniform(p, rng);
  const auto x = uniform_vec(3, rng);
  const auto h = uniform_vec(5, rng);
  const auto a = gru_step(x, h, p, l);
  const auto b = gru_step(x, h, p, l);
  EXPECT_EQ(a.next_state, b.next_state);
}

TEST(Gru, DimensionMismatch) {
  ParameterStore p;
  const auto l = add_gru(p, "g", 3, 4);
  EXPECT_THROW(gru_step(std::vector<double>{1, 2}, std::vector<double>(4), p, l), DimensionError);
  EXPECT_THROW(gru_step(std::vector<double>{1, 2, 3}, std::vector<double>(3), p, l), DimensionError);
}

TEST(Gru, JacobianMatchesFiniteDifferences) {
  ParameterStore p;
  const auto l = add_gru(p, "g", 3, 4);
  std::mt19937_64 rng(11);
  fill_uniform(p, rng);
  auto x = uniform_vec(3, rng);
  auto h = uniform_vec(4, rng);
  const double eps = 1e-6;
  std::vector<double> saved(saved_size(Layer{l}));
  std::vector<double> out(4);
  double worst = 0.0;
  for (std::size_t o = 0; o < 4; ++o) {
    std::vector<double> dy(4, 0.0);
    dy[o] = 1.0;
    gru_forward(p, l, x.data(), h.data(), saved.data(), out.data());
    std::vector<double> dx(3, 0.0);
    std::vector<double> dh(4, 0.0);
    gru_backward(p, l, x.data(), h.data(), saved.data(), dy.data(), nullptr, dx.data(), dh.data());
    auto numeric = [&](std::vector<double>& v, std::size_t i) {
      const double orig = v[i];
      v[i] = orig + eps;
      gru_forward(p, l, x.data(), h.data(), saved.data(), out.data());
      const double up = out[o];
      v[i] = orig - eps;
      gru_forward(p, l, x.data(), h.data(), saved.data(), out.data());
      const double down = out[o];
      v[i] = orig;
      return (up - down) / (2.0 * eps);
    };
    for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, rel_err(dx[i], numeric(x, i)));
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, rel_err(dh[i], numeric(h, i)));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Tape, LinearCase) {
  // loss = w * x with x = 3.
  ParameterStore p;
  Layer l = add_dense(p, "d", 1, 1, Activation::Identity);
  p.value(0)[0] = 0.25;
  Tape tape(p);
  const int x = tape.input(std::vector<double>{3.0}, 0);
  const int y = tape.dense(l, x, 0);
  GradientSet g(p);
  tape.backward_from(y, g, 200);
  EXPECT_DOUBLE_EQ(g[0][0], 3.0);
  EXPECT_DOUBLE_EQ(g[1][0], 1.0);
}

TEST(Tape, IndependentParameterHasZeroGradient) {
  ParameterStore p;
  Layer used = add_dense(p, "used", 2, 1, Activation::Identity);
  add_dense(p, "unused", 2, 1, Activation::Identity);
  std::mt19937_64 rng(1);
  fill_uniform(p, rng);
  Tape tape(p);
  const int y = tape.dense(used, tape.input(std::vector<double>{0.4, -0.2}, 0), 0);
  GradientSet g(p);
  tape.backward_from(y, g, 200);
  for (std::size_t i = 2; i < 4; ++i) {
    for (double v : g[i].flat()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Tape, BackwardTwiceIsStateError) {
  ParameterStore p;
  Layer l = add_dense(p, "d", 1, 1, Activation::Identity);
  Tape tape(p);
  const int y = tape.dense(l, tape.input(std::vector<double>{1.0}, 0), 0);
  GradientSet g(p);
  tape.backward_from(y, g, 200);
  EXPECT_THROW(tape.backward_from(y, g, 200), StateError);
  EXPECT_THROW(tape.dense(l, 0, 0), StateError);
}

TEST(Tape, ZeroTruncationIsContractError) {
  ParameterStore p;
  Layer l = add_dense(p, "d", 1, 1, Activation::Identity);
  Tape tape(p);
  const int y = tape.dense(l, tape.input(std::vector<double>{1.0}, 0), 0);
  GradientSet g(p);
  EXPECT_THROW(tape.backward_from(y, g, 0), ContractError);
}

namespace {

// Scalar probe sum_i c_i y_i over one layer application, forward-only.
double dense_probe(const ParameterStore& p, const DenseLayer& l, const std::vector<double>& x,
                   const std::vector<double>& c) {
  std::vector<double> pre(l.out), y(l.out);
  dense_forward(p, l, x.data(), pre.data(), y.data());
  double s = 0.0;
  for (std::size_t i = 0; i < l.out; ++i) s += c[i] * y[i];
  return s;
}

}  // namespace

class DenseGradient : public ::testing::TestWithParam<Activation> {};

TEST_P(DenseGradient, MatchesFiniteDifferences) {
  ParameterStore p;
  Layer layer = add_dense(p, "d", 4, 3, GetParam());
  const auto& l = std::get<DenseLayer>(layer);
  std::mt19937_64 rng(21);
  fill_uniform(p, rng);
  const auto x = uniform_vec(4, rng);
  const auto c = uniform_vec(3, rng);
  Tape tape(p);
  const int y = tape.dense(layer, tape.input(x, 0), 0);
  auto adj = tape.adjoint(y);
  std::copy(c.begin(), c.end(), adj.begin());
  GradientSet g(p);
  tape.backward(g, 200);
  const auto flat = g.flatten();
  std::uniform_int_distribution<std::size_t> pick(0, flat.size() - 1);
  for (int probe = 0; probe < 10; ++probe) {
    const std::size_t i = pick(rng);
    const double n = central_diff(p, i, [&] { return dense_probe(p, l, x, c); });
    EXPECT_LT(rel_err(flat[i], n), 1e-4) << "parameter " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(AllKinds, DenseGradient,
                         ::testing::Values(Activation::Identity, Activation::SReLU, Activation::ReLU,
                                           Activation::Sigmoid, Activation::Tanh));

TEST(NeuromodGradient, MatchesFiniteDifferences) {
  ParameterStore p;
  Layer zl = add_dense(p, "signal", 3, 5, Activation::Tanh);
  Layer layer = add_neuromod(p, "nm", 4, 3, 5, Activation::Sigmoid);
  std::mt19937_64 rng(31);
  fill_uniform(p, rng);
  const auto s_in = uniform_vec(3, rng);
  const auto x = uniform_vec(4, rng);
  const auto c = uniform_vec(3, rng);
  auto forward = [&] {
    Tape t(p);
    const int z = t.dense(zl, t.input(s_in, 0), 0);
    const int y = t.neuromod(layer, t.input(x, 0), z, 0);
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s += c[i] * t.value(y)[i];
    return s;
  };
  Tape tape(p);
  const int z = tape.dense(zl, tape.input(s_in, 0), 0);
  const int y = tape.neuromod(layer, tape.input(x, 0), z, 0);
  auto adj = tape.adjoint(y);
  std::copy(c.begin(), c.end(), adj.begin());
  GradientSet g(p);
  tape.backward(g, 200);
  const auto flat = g.flatten();
  std::uniform_int_distribution<std::size_t> pick(0, flat.size() - 1);
  for (int probe = 0; probe < 20; ++probe) {
    const std::size_t i = pick(rng);
    EXPECT_LT(rel_err(flat[i], central_diff(p, i, forward)), 1e-4) << "parameter " << i;
  }
}

namespace {

struct Stack {
  ParameterStore p;
  Layer gru, hidden, out;
  Stack() {
    gru = add_gru(p, "gru", 2, 6);
    hidden = add_dense(p, "hidden", 6, 4, Activation::SReLU);
    out = add_dense(p, "out", 4, 1, Activation::Identity);
  }
  // loss = sum_t c_t * y_t over a sequence, recorded on `t`.
  double record(Tape& t, const std::vector<std::vector<double>>& xs, const std::vector<double>& c,
                std::vector<int>* outs = nullptr) const {
    int h = -1;
    double loss = 0.0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
      h = t.gru(gru, t.input(xs[s], s), h, s);
      const int y = t.dense(out, t.dense(hidden, h, s), s);
      loss += c[s] * t.value(y)[0];
      if (outs) outs->push_back(y);
    }
    return loss;
  }
  GradientSet grad(const std::vector<std::vector<double>>& xs, const std::vector<double>& c,
                   std::size_t T) const {
    Tape t(p);
    std::vector<int> outs;
    record(t, xs, c, &outs);
    for (std::size_t s = 0; s < outs.size(); ++s) t.adjoint(outs[s])[0] = c[s];
    GradientSet g(p);
    t.backward(g, T);
    return g;
  }
};

}  // namespace

TEST(Backward, ThreeLayerNetworkMatchesFiniteDifferences) {
  Stack net;
  std::mt19937_64 rng(41);
  fill_uniform(net.p, rng);
  std::vector<std::vector<double>> xs;
  for (int s = 0; s < 6; ++s) xs.push_back(uniform_vec(2, rng));
  const auto c = uniform_vec(6, rng);
  const auto flat = net.grad(xs, c, 200).flatten();
  std::uniform_int_distribution<std::size_t> pick(0, flat.size() - 1);
  for (int probe = 0; probe < 10; ++probe) {
    const std::size_t i = pick(rng);
    const double n = central_diff(net.p, i, [&] {
      Tape t(net.p);
      return net.record(t, xs, c);
    });
    EXPECT_LT(rel_err(flat[i], n), 1e-4) << "parameter " << i;
  }
}

TEST(Backward, TruncationWindowCoveringSequenceIsFullBptt) {
  Stack net;
  std::mt19937_64 rng(43);
  fill_uniform(net.p, rng);
  std::vector<std::vector<double>> xs;
  for (int s = 0; s < 7; ++s) xs.push_back(uniform_vec(2, rng));
  const auto c = uniform_vec(7, rng);
  const auto full = net.grad(xs, c, 7).flatten();
  EXPECT_EQ(full, net.grad(xs, c, 1000).flatten());
  // T = 1 equals summing single-step gradients where the carried state is a constant input.
  const auto t1 = net.grad(xs, c, 1).flatten();
  std::vector<double> manual(t1.size(), 0.0);
  std::vector<double> h(6, 0.0);
  for (std::size_t s = 0; s < xs.size(); ++s) {
    Tape t(net.p);
    const int hp = t.input(h, s);
    // Feed h as an input node so no gradient can cross steps.
    const int hn = t.gru(net.gru, t.input(xs[s], s), hp, s);
    const int y = t.dense(net.out, t.dense(net.hidden, hn, s), s);
    t.adjoint(y)[0] = c[s];
    GradientSet g(net.p);
    t.backward(g, 1000);
    const auto gs = g.flatten();
    for (std::size_t i = 0; i < gs.size(); ++i) manual[i] += gs[i];
    const auto hv = t.value(hn);
    h.assign(hv.begin(), hv.end());
  }
  for (std::size_t i = 0; i < t1.size(); ++i) EXPECT_NEAR(t1[i], manual[i], 1e-12);
  EXPECT_NE(full, t1);
}

TEST(Backward, Deterministic) {
  Stack net;
  std::mt19937_64 rng(47);
  fill_uniform(net.p, rng);
  std::vector<std::vector<double>> xs;
  for (int s = 0; s < 5; ++s) xs.push_back(uniform_vec(2, rng));
  const auto c = uniform_vec(5, rng);
  EXPECT_EQ(net.grad(xs, c, 3).flatten(), net.grad(xs, c, 3).flatten());
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParameterStore p;
  p.add("w", 2, 2);
  std::mt19937_64 rng(5);
  fill_uniform(p, rng);
  const auto before = p.flatten();
  GradientSet g(p);
  adam_step(p, g, 1e-3, 1, {});
  EXPECT_EQ(before, p.flatten());
}

TEST(Adam, SingleScalarStep) {
  ParameterStore p;
  p.add("w", 1, 1);
  GradientSet g(p);
  g[0][0] = 1.0;
  const double alpha = 0.01;
  const double lr = adam_step(p, g, alpha, 1, {0.9, 0.999, 1e-8});
  EXPECT_NEAR(p.entry(0).moment_z[0], 0.1, 1e-15);
  EXPECT_NEAR(p.entry(0).moment_v[0], 0.001, 1e-15);
  const double lr_expected = alpha * std::sqrt(0.001) / 0.1;
  EXPECT_NEAR(lr, lr_expected, 1e-15);
  EXPECT_NEAR(p.value(0)[0], -lr_expected * 0.1 / (std::sqrt(0.001) + 1e-8), 1e-15);
}

TEST(Adam, StepIndexZeroIsContractError) {
  ParameterStore p;
  p.add("w", 1, 1);
  GradientSet g(p);
  EXPECT_THROW(adam_step(p, g, 1e-3, 0, {}), ContractError);
}

TEST(Adam, DeterministicAndScaleInvariantSigns) {
  auto run = [](double scale) {
    ParameterStore p;
    p.add("w", 3, 1);
    GradientSet g(p);
    const double gs[3] = {0.5, -2.0, 1e-3};
    std::vector<double> deltas;
    for (std::size_t step = 1; step <= 5; ++step) {
      for (int i = 0; i < 3; ++i) g[0][i] = scale * gs[i];
      const auto before = p.flatten();
      adam_step(p, g, 1e-2, step, {});
      const auto after = p.flatten();
      for (int i = 0; i < 3; ++i) deltas.push_back(after[i] - before[i]);
    }
    return std::make_pair(p.flatten(), deltas);
  };
  EXPECT_EQ(run(1.0).first, run(1.0).first);
  const auto a = run(1.0).second;
  const auto b = run(7.0).second;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(std::signbit(a[i]), std::signbit(b[i]));
  }
}

TEST(Adam, ConstantGradientStepApproachesEffectiveRate) {
  ParameterStore p;
  p.add("w", 1, 1);
  GradientSet g(p);
  g[0][0] = 0.3;
  double lr = 0.0;
  double delta = 0.0;
  for (std::size_t step = 1; step <= 20000; ++step) {
    const double before = p.value(0)[0];
    lr = adam_step(p, g, 1e-3, step, {});
    delta = before - p.value(0)[0];
  }
  EXPECT_NEAR(delta, lr, 1e-6 * lr);
}

TEST(ParameterStore, MomentsMatchShapesAndOrderIsStable) {
  ParameterStore p;
  p.add("b", 2, 3);
  p.add("a", 4, 1);
  p.enable_moments();
  for (const auto& e : p.entries()) {
    EXPECT_TRUE(e.moment_z.same_shape(e.value));
    EXPECT_TRUE(e.moment_v.same_shape(e.value));
  }
  EXPECT_EQ(p.entries()[0].name, "b");
  EXPECT_EQ(p.parameter_count(), 10u);
  EXPECT_THROW(p.add("a", 1, 1), ConfigError);
}

TEST(Parallel, OpenMpMatchesSerialBitwise) {
  std::vector<double> serial(257), omp(257);
  auto body = [](std::vector<double>& out) {
    return [&out](std::size_t i) {
      double s = 0.0;
      for (std::size_t k = 0; k <= i; ++k) s += std::sin(static_cast<double>(k) * 0.37);
      out[i] = s;
    };
  };
  parallel_for(serial.size(), ExecPolicy::Serial, body(serial));
  parallel_for(omp.size(), ExecPolicy::OpenMP, body(omp));
  EXPECT_EQ(serial, omp);
}

TEST(Parallel, LowestIndexExceptionWins) {
  try {
    parallel_for(10, ExecPolicy::OpenMP, [](std::size_t i) {
      if (i == 3 || i == 7) throw std::runtime_error(std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "3");
  }
  EXPECT_THROW(parse_exec_policy("gpu"), ConfigError);
}
