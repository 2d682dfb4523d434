#include "helpers.hpp"
#include "hrdyn/error.hpp"
#include "hrdyn/nn/gradcheck.hpp"
#include "hrdyn/nn/layers.hpp"
#include "hrdyn/nn/loss.hpp"
#include "hrdyn/nn/lstm.hpp"
#include "hrdyn/nn/optim.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace hrdyn;
using namespace hrdyn::nn;

namespace {

Tensor random_tensor(Shape s, Rng& rng, double sd = 1.0) {
  Tensor t(std::move(s));
  for (double& v : t.data) v = sd * standard_normal(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

// Checks the gradients of <w, f(x)> with respect to x and every parameter.
// `forward` maps the input to an output; `backward` takes dL/dy and returns
// dL/dx while accumulating parameter gradients.
double layer_grad_error(Tensor x, const std::function<Tensor(const Tensor&)>& forward,
                        const std::function<Tensor(const Tensor&)>& backward,
                        std::vector<Parameter*> params, std::uint64_t seed) {
  Rng rng(seed);
  Parameter input("input", std::move(x));
  const Tensor probe = forward(input.value);
  const Tensor w = random_tensor(probe.shape, rng);
  std::vector<Parameter*> all = params;
  all.push_back(&input);
  const auto loss = [&] { return dot(w, forward(input.value)); };
  const auto grads = [&] {
    for (Parameter* p : all) p->zero_grad();
    forward(input.value);
    const Tensor dx = backward(w);
    input.grad = dx;
  };
  return grad_check(loss, grads, all).max_rel_error;
}

}  // namespace

TEST_CASE("linear forward examples") {
  const Tensor x({1, 2}, {1.0, 2.0});
  CHECK(linear_forward(x, Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2})).data == std::vector<double>{1.0, 2.0});
  CHECK(linear_forward(x, Tensor({1, 2}, {1, 1}), Tensor({1}, {1.0})).data == std::vector<double>{4.0});
  CHECK(linear_forward(x, Tensor({3, 2}), Tensor({3})).data == std::vector<double>(3, 0.0));
  CHECK_THROWS_WITH_AS(linear_forward(x, Tensor({2, 3}), Tensor({2})), doctest::Contains("[2,3]"),
                       ShapeError);
}

TEST_CASE("conv1d forward examples") {
  const Tensor x({1, 1, 3}, {1, 2, 3});
  CHECK(conv1d_forward(x, Tensor({1, 1, 2}, {1, 1}), Tensor({1})).data == std::vector<double>{3, 5});
  CHECK(conv1d_forward(x, Tensor({1, 1, 1}, {1}), Tensor({1})).data == x.data);
  CHECK(conv1d_forward(x, Tensor({1, 1, 2}), Tensor({1})).data == std::vector<double>{0, 0});
  // Cross-correlation: no kernel flip.
  CHECK(conv1d_forward(x, Tensor({1, 1, 2}, {1, 0}), Tensor({1})).data == std::vector<double>{1, 2});
  CHECK_THROWS_AS(conv1d_forward(x, Tensor({1, 1, 4}), Tensor({1})), ShapeError);
}

TEST_CASE("batchnorm examples") {
  BatchNormState st{Tensor({1}, 0.0), Tensor({1}, 1.0)};
  const Tensor x({2, 1, 1}, {1.0, 3.0});
  const Tensor y = batchnorm1d(x, Tensor({1}, 1.0), Tensor({1}, 0.0), st, Mode::train);
  // (x - 2) / sqrt(1 + 1e-5)
  const double expect = 1.0 / std::sqrt(1.0 + 1e-5);
  CHECK(y.data[0] == doctest::Approx(-expect).epsilon(1e-12));
  CHECK(y.data[1] == doctest::Approx(expect).epsilon(1e-12));
  // Running stats: mean 0.9*0 + 0.1*2, var 0.9*1 + 0.1*2 (unbiased batch var 2).
  CHECK(st.running_mean.data[0] == doctest::Approx(0.2));
  CHECK(st.running_var.data[0] == doctest::Approx(1.1));

  BatchNormState st2{Tensor({1}, 0.0), Tensor({1}, 1.0)};
  const Tensor yb = batchnorm1d(x, Tensor({1}, 0.0), Tensor({1}, 0.7), st2, Mode::train);
  CHECK(yb.data == std::vector<double>{0.7, 0.7});

  BatchNormState st3{Tensor({1}, 0.0), Tensor({1}, 1.0)};
  const Tensor ye = batchnorm1d(x, Tensor({1}, 1.0), Tensor({1}, 0.0), st3, Mode::eval, 0.1, 0.0);
  CHECK(ye.data == x.data);
}

TEST_CASE("relu and maxpool") {
  CHECK(relu(Tensor({2}, {-1.0, 2.0})).data == std::vector<double>{0.0, 2.0});
  CHECK(maxpool1d(Tensor({1, 1, 4}, {1, 3, 2, 4})).data == std::vector<double>{3, 4});
  CHECK(maxpool1d(Tensor({1, 1, 5}, {1, 3, 2, 4, 9})).data == std::vector<double>{3, 4});

  MaxPool1d pool(2);
  pool.forward(Tensor({1, 1, 4}, {5, 5, 1, 2}));
  const Tensor dx = pool.backward(Tensor({1, 1, 2}, {1.0, 1.0}));
  CHECK(dx.data == std::vector<double>{1, 0, 0, 1});
}

TEST_CASE("lstm forward examples") {
  const int n = 2, len = 4, in = 3, h = 5;
  Rng rng(1);
  const Tensor x = random_tensor({n, len, in}, rng);
  const Tensor zero_h({n, h});
  const LstmOutput z = lstm_forward(x, Tensor({4 * h, in}), Tensor({4 * h, h}), Tensor({4 * h}), zero_h, zero_h);
  CHECK(z.h_seq.shape == Shape{n, len, h});
  for (double v : z.h_seq.data) CHECK(v == 0.0);

  Tensor bias({4 * h});
  for (int j = h; j < 2 * h; ++j) bias.data[static_cast<std::size_t>(j)] = 10.0;
  const Tensor c0 = random_tensor({n, h}, rng);
  const LstmOutput f = lstm_forward(x, Tensor({4 * h, in}), Tensor({4 * h, h}), bias, zero_h, c0);
  // With zero weights the cell decays by sigmoid(10) per step.
  const double keep = std::pow(1.0 / (1.0 + std::exp(-10.0)), len);
  for (std::size_t i = 0; i < c0.size(); ++i) {
    CHECK(f.c_last.data[i] == doctest::Approx(keep * c0.data[i]).epsilon(1e-12));
    CHECK(std::abs(f.c_last.data[i] - c0.data[i]) <= 2e-4 * std::abs(c0.data[i]));
  }
}

TEST_CASE("lstm matches a hand-rolled cell") {
  const int in = 2, h = 3;
  Rng rng(2);
  const Tensor w_ih = random_tensor({4 * h, in}, rng, 0.5);
  const Tensor w_hh = random_tensor({4 * h, h}, rng, 0.5);
  const Tensor b = random_tensor({4 * h}, rng, 0.5);
  const Tensor x = random_tensor({1, 2, in}, rng);
  const Tensor h0 = random_tensor({1, h}, rng);
  const Tensor c0 = random_tensor({1, h}, rng);
  const LstmOutput out = lstm_forward(x, w_ih, w_hh, b, h0, c0);

  std::vector<double> hv(h0.data), cv(c0.data);
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (int t = 0; t < 2; ++t) {
    std::vector<double> g(4 * h);
    for (int r = 0; r < 4 * h; ++r) {
      double s = b.data[static_cast<std::size_t>(r)];
      for (int k = 0; k < in; ++k) s += w_ih.data[static_cast<std::size_t>(r * in + k)] * x.data[static_cast<std::size_t>(t * in + k)];
      for (int k = 0; k < h; ++k) s += w_hh.data[static_cast<std::size_t>(r * h + k)] * hv[static_cast<std::size_t>(k)];
      g[static_cast<std::size_t>(r)] = s;
    }
    for (int j = 0; j < h; ++j) {
      const auto u = static_cast<std::size_t>(j);
      const double i_g = sig(g[u]), f_g = sig(g[u + h]), c_g = std::tanh(g[u + 2 * h]), o_g = sig(g[u + 3 * h]);
      cv[u] = f_g * cv[u] + i_g * c_g;
      hv[u] = o_g * std::tanh(cv[u]);
    }
  }
  for (int j = 0; j < h; ++j) {
    CHECK(out.h_last.data[static_cast<std::size_t>(j)] == doctest::Approx(hv[static_cast<std::size_t>(j)]).epsilon(1e-12));
    CHECK(out.c_last.data[static_cast<std::size_t>(j)] == doctest::Approx(cv[static_cast<std::size_t>(j)]).epsilon(1e-12));
  }
}

TEST_CASE("mae loss") {
  auto r = mae_loss(Tensor({1}, {72.0}), Tensor({1}, {75.0}));
  CHECK(r.loss == 3.0);
  CHECK(r.grad.data == std::vector<double>{-1.0});
  r = mae_loss(Tensor({2}, {70.0, 80.0}), Tensor({2}, {72.0, 76.0}));
  CHECK(r.loss == 3.0);
  CHECK(r.grad.data == std::vector<double>{-0.5, 0.5});
  r = mae_loss(Tensor({2}, {1.0, 2.0}), Tensor({2}, {1.0, 2.0}));
  CHECK(r.loss == 0.0);
  CHECK(r.grad.data == std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(mae_loss(Tensor({0}), Tensor({0})), InputError);
}

TEST_CASE("adam first step and reference trajectory") {
  Parameter p("p", Tensor({1}, 0.0));
  p.grad.data[0] = 1.0;
  Adam adam({5e-4, 0.9, 0.999, 1e-8, 0.0});
  std::vector<Parameter*> ps{&p};
  adam.step(ps);
  CHECK(std::abs(p.value.data[0] - (-5e-4 / (1.0 + 1e-8))) < 1e-12);
  CHECK(adam.step_count() == 1);

  // Hand-rolled Adam with coupled weight decay over several steps.
  Rng rng(3);
  Parameter q("q", random_tensor({4}, rng));
  const AdamConfig cfg{1e-3, 0.9, 0.999, 1e-8, 1e-2};
  Adam opt(cfg);
  std::vector<double> theta(q.value.data), m(4, 0.0), v(4, 0.0);
  std::vector<Parameter*> qs{&q};
  for (int t = 1; t <= 5; ++t) {
    const Tensor g = random_tensor({4}, rng);
    q.grad = g;
    opt.step(qs);
    for (std::size_t i = 0; i < 4; ++i) {
      const double gi = g.data[i] + cfg.weight_decay * theta[i];
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * gi * gi;
      const double mh = m[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = v[i] / (1 - std::pow(cfg.beta2, t));
      theta[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
      CHECK(std::abs(q.value.data[i] - theta[i]) < 1e-12);
    }
  }
}

TEST_CASE("adam: zero gradients, symmetry, permutation, NaN guard") {
  Parameter a("a", Tensor({3}, 0.5)), b("b", Tensor({3}, 0.5));
  Adam adam({5e-4, 0.9, 0.999, 1e-8, 0.0});
  std::vector<Parameter*> ab{&a, &b};
  for (int i = 0; i < 3; ++i) adam.step(ab);
  CHECK(a.value.data == std::vector<double>(3, 0.5));

  a.grad.fill(0.3);
  b.grad.fill(0.3);
  adam.step(ab);
  CHECK(a.value == b.value);

  Rng rng(4);
  Parameter c1("c", random_tensor({2}, rng)), d1("d", random_tensor({3}, rng));
  Parameter c2 = c1, d2 = d1;
  Adam o1, o2;
  for (int s = 0; s < 3; ++s) {
    const Tensor gc = random_tensor({2}, rng), gd = random_tensor({3}, rng);
    c1.grad = gc;
    d1.grad = gd;
    c2.grad = gc;
    d2.grad = gd;
    std::vector<Parameter*> order1{&c1, &d1}, order2{&d2, &c2};
    o1.step(order1);
    o2.step(order2);
  }
  CHECK(c1.value == c2.value);
  CHECK(d1.value == d2.value);

  const Tensor before = c1.value;
  const Tensor d_before = d1.value;
  c1.grad.fill(0.1);
  d1.grad.data[1] = std::nan("");
  std::vector<Parameter*> both{&c1, &d1};
  CHECK_THROWS_AS(o1.step(both), NumericError);
  CHECK(c1.value == before);
  CHECK(d1.value == d_before);
}

TEST_CASE("plateau scheduler") {
  // One improvement, then ten stagnant epochs: the cut lands on the 10th.
  PlateauScheduler s;
  double lr = 5e-4;
  lr = s.step(1.0, lr);
  lr = s.step(0.99, lr);
  for (int i = 1; i <= 10; ++i) {
    lr = s.step(0.99, lr);
    if (i < 10) CHECK(lr == 5e-4);
  }
  CHECK(lr == doctest::Approx(5e-5).epsilon(1e-15));
  CHECK(s.reduced_last_step());
  CHECK(s.stagnant_epochs() == 0);

  std::vector<double> down(50);
  for (std::size_t i = 0; i < down.size(); ++i) down[i] = 1.0 - 0.01 * static_cast<double>(i);
  CHECK(plateau_lr(down, 5e-4) == 5e-4);

  std::vector<double> reset{1.0};
  for (int i = 0; i < 9; ++i) reset.push_back(1.0);
  reset.push_back(0.5);
  for (int i = 0; i < 9; ++i) reset.push_back(0.5);
  CHECK(plateau_lr(reset, 5e-4) == 5e-4);
}

TEST_CASE("early stopping fires on the 30th stagnant epoch") {
  EarlyStopping es(30);
  CHECK_FALSE(es.step(1.0));
  for (int i = 1; i <= 30; ++i) {
    const bool stop = es.step(1.0);
    CHECK(stop == (i == 30));
  }
  EarlyStopping es2(30);
  for (int i = 0; i < 100; ++i) CHECK_FALSE(es2.step(1.0 - 1e-3 * i));
}

TEST_CASE("grad check: linear + MAE, and sensitivity to a wrong backward") {
  Rng rng(5);
  Linear lin("lin", 4, 3);
  lin.init(rng);
  const Tensor x = random_tensor({5, 4}, rng);
  const Tensor target = random_tensor({5 * 3}, rng, 3.0);
  std::vector<Parameter*> params;
  lin.collect(params);
  const auto loss = [&] { return mae_loss(lin.forward(x).reshaped({15}), target).loss; };
  const auto grads = [&] {
    for (Parameter* p : params) p->zero_grad();
    const auto r = mae_loss(lin.forward(x).reshaped({15}), target);
    lin.backward(r.grad.reshaped({5, 3}));
  };
  CHECK(grad_check(loss, grads, params).max_rel_error < 1e-6);

  const auto wrong = [&] {
    grads();
    for (Parameter* p : params) {
      for (double& g : p->grad.data) g *= 1.1;
    }
  };
  CHECK(grad_check(loss, wrong, params).max_rel_error > 1e-2);
}

TEST_CASE("layer gradients agree with finite differences") {
  Rng rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 2 + trial, c_in = 1 + trial, c_out = 2 + trial, len = 9 + 2 * trial;
    SUBCASE("linear") {
      Linear l("l", c_in + 2, c_out);
      l.init(rng);
      std::vector<Parameter*> ps;
      l.collect(ps);
      CHECK(layer_grad_error(random_tensor({n, c_in + 2}, rng), [&](const Tensor& x) { return l.forward(x); },
                             [&](const Tensor& d) { return l.backward(d); }, ps, 10 + trial) < 1e-4);
    }
    SUBCASE("conv1d") {
      for (int stride : {1, 2}) {
        Conv1d c("c", c_in, c_out, 3, stride);
        c.init(rng);
        std::vector<Parameter*> ps;
        c.collect(ps);
        CHECK(layer_grad_error(random_tensor({n, c_in, len}, rng), [&](const Tensor& x) { return c.forward(x); },
                               [&](const Tensor& d) { return c.backward(d); }, ps, 20 + trial) < 1e-4);
      }
    }
    SUBCASE("batchnorm") {
      BatchNorm1d bn("bn", c_in);
      for (double& g : bn.gamma.value.data) g = 0.5 + uniform01(rng);
      for (double& b : bn.beta.value.data) b = standard_normal(rng);
      std::vector<Parameter*> ps;
      bn.collect(ps);
      CHECK(layer_grad_error(random_tensor({n, c_in, len}, rng),
                             [&](const Tensor& x) { return bn.forward(x, Mode::train); },
                             [&](const Tensor& d) { return bn.backward(d); }, ps, 30 + trial) < 1e-4);
    }
    SUBCASE("relu") {
      ReLU r;
      CHECK(layer_grad_error(random_tensor({n, c_in, len}, rng), [&](const Tensor& x) { return r.forward(x); },
                             [&](const Tensor& d) { return r.backward(d); }, {}, 40 + trial) < 1e-4);
    }
    SUBCASE("maxpool") {
      MaxPool1d mp(2);
      CHECK(layer_grad_error(random_tensor({n, c_in, len}, rng), [&](const Tensor& x) { return mp.forward(x); },
                             [&](const Tensor& d) { return mp.backward(d); }, {}, 50 + trial) < 1e-4);
    }
    SUBCASE("lstm") {
      const int h = 3 + trial;
      Lstm lstm("lstm", c_in + 1, h);
      lstm.init(rng, 1.0);
      std::vector<Parameter*> ps;
      lstm.collect(ps);
      Parameter h0("h0", random_tensor({n, h}, rng, 0.5)), c0("c0", random_tensor({n, h}, rng, 0.5));
      ps.push_back(&h0);
      ps.push_back(&c0);
      const Tensor wl = random_tensor({n, h}, rng), wc = random_tensor({n, h}, rng);
      // Loss touches the full sequence and both final states.
      const auto fwd = [&](const Tensor& x) {
        const LstmOutput o = lstm.forward(x, h0.value, c0.value);
        Tensor packed({static_cast<int>(o.h_seq.size())}, o.h_seq.data);
        return packed;
      };
      Tensor wseq;
      const auto bwd = [&](const Tensor& d) {
        const LstmGrads g = lstm.backward(d.reshaped({n, len, h}), wl, wc);
        h0.grad = g.dh0;
        c0.grad = g.dc0;
        return g.dx_seq;
      };
      Parameter input("input", random_tensor({n, len, c_in + 1}, rng));
      const Tensor probe = fwd(input.value);
      wseq = random_tensor(probe.shape, rng);
      std::vector<Parameter*> all = ps;
      all.push_back(&input);
      const auto loss = [&] {
        const LstmOutput o = lstm.forward(input.value, h0.value, c0.value);
        return dot(wseq, Tensor(probe.shape, o.h_seq.data)) + dot(wl, o.h_last) + dot(wc, o.c_last);
      };
      const auto grads = [&] {
        for (Parameter* p : all) p->zero_grad();
        fwd(input.value);
        input.grad = bwd(wseq);
      };
      CHECK(grad_check(loss, grads, all).max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("output shapes follow the closed forms") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(uniform01(rng) * 3);
    const int c_in = 1 + static_cast<int>(uniform01(rng) * 3);
    const int c_out = 1 + static_cast<int>(uniform01(rng) * 3);
    const int k = 1 + static_cast<int>(uniform01(rng) * 5);
    const int stride = 1 + static_cast<int>(uniform01(rng) * 3);
    const int len = k + static_cast<int>(uniform01(rng) * 20);
    const int pool = 1 + static_cast<int>(uniform01(rng) * 3);
    const Tensor y = conv1d_forward(Tensor({n, c_in, len}), Tensor({c_out, c_in, k}), Tensor({c_out}), stride);
    CHECK(y.shape == Shape{n, c_out, (len - k) / stride + 1});
    CHECK(maxpool1d(y, pool).shape == Shape{n, c_out, ((len - k) / stride + 1) / pool});
    const int h = 1 + static_cast<int>(uniform01(rng) * 4);
    const LstmOutput o = lstm_forward(Tensor({n, len, c_in}), Tensor({4 * h, c_in}), Tensor({4 * h, h}),
                                      Tensor({4 * h}), Tensor({n, h}), Tensor({n, h}));
    CHECK(o.h_seq.shape == Shape{n, len, h});
    CHECK(o.h_last.shape == Shape{n, h});
  }
}

TEST_CASE("initialization is deterministic per seed") {
  Rng r1(9), r2(9);
  Lstm a("a", 4, 6), b("b", 4, 6);
  a.init(r1);
  b.init(r2);
  CHECK(a.w_ih.value == b.w_ih.value);
  CHECK(a.w_hh.value == b.w_hh.value);
  for (int j = 0; j < 6; ++j) CHECK(a.bias.value.data[static_cast<std::size_t>(6 + j)] == 1.0);
  const double bound = std::sqrt(1.0 / 6.0);
  for (double v : a.w_hh.value.data) CHECK(std::abs(v) <= bound);
}
