// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include "hrdyn/datagen.hpp"
#include "hrdyn/harness.hpp"
#include "hrdyn/infodyn.hpp"
#include "hrdyn/model.hpp"
#include "hrdyn/nn/gradcheck.hpp"
#include "hrdyn/nn/layers.hpp"
#include "hrdyn/nn/loss.hpp"
#include "hrdyn/nn/lstm.hpp"
#include "hrdyn/nn/optim.hpp"
#include "hrdyn/report.hpp"
#include "hrdyn/rng.hpp"
#include "hrdyn/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace hrdyn;
using nn::Parameter;
using nn::Tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::pair<std::vector<double>, std::vector<double>> gaussian_pair(std::size_t n, double rho, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  const double c = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = standard_normal(rng);
    y[i] = rho * x[i] + c * standard_normal(rng);
  }
  return {x, y};
}

// ---- criterion 1 ---------------------------------------------------------

Outcome analytic_mi() {
  Outcome o;
  const auto t0 = Clock::now();
  for (double rho : {0.5, 0.9}) {
    const double truth = -0.5 * std::log(1.0 - rho * rho);
    const auto [hx, hy] = gaussian_pair(100000, rho, 11);
    // Finer bins keep the discretization bias small for the sharper joint.
    const int bins = rho > 0.8 ? 32 : 16;
    const double h = mi_hist(Samples::scalar(hx), hy, bins);
    const auto [kx, ky] = gaussian_pair(5000, rho, 12);
    const double k = mi_ksg(Samples::scalar(kx), ky, 3, 1);
    o.require(std::abs(h - truth) <= 0.05, "rho " + fmt("%.1f", rho) + " hist " + fmt("%.4f", h) + " vs " + fmt("%.4f", truth));
    o.require(std::abs(k - truth) <= 0.05, "ksg " + fmt("%.4f", k));
  }
  const double sec = seconds_since(t0);
  o.require(sec < 30.0, fmt("%.1fs", sec));
  return o;
}

// ---- criterion 2 ---------------------------------------------------------

std::vector<int> equal_width_bins(const std::vector<double>& v, int bins) {
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  std::vector<int> out(v.size(), 0);
  if (!(hi > lo)) return out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::clamp(static_cast<int>(std::floor((v[i] - lo) / (hi - lo) * bins)), 0, bins - 1);
  }
  return out;
}

double double_sum_mi(const std::vector<double>& x, const std::vector<double>& y, int bins) {
  const auto bx = equal_width_bins(x, bins), by = equal_width_bins(y, bins);
  const double n = static_cast<double>(x.size());
  std::vector<double> pxy(static_cast<std::size_t>(bins * bins), 0.0), px(static_cast<std::size_t>(bins), 0.0),
      py(static_cast<std::size_t>(bins), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    pxy[static_cast<std::size_t>(bx[i] * bins + by[i])] += 1.0 / n;
    px[static_cast<std::size_t>(bx[i])] += 1.0 / n;
    py[static_cast<std::size_t>(by[i])] += 1.0 / n;
  }
  double mi = 0.0;
  for (int a = 0; a < bins; ++a) {
    for (int b = 0; b < bins; ++b) {
      const double p = pxy[static_cast<std::size_t>(a * bins + b)];
      if (p > 0.0) mi += p * std::log(p / (px[static_cast<std::size_t>(a)] * py[static_cast<std::size_t>(b)]));
    }
  }
  return mi;
}

Outcome brute_force_mi() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int bins = 2 + static_cast<int>(uniform01(rng) * 7);
    const std::size_t n = 5 + static_cast<std::size_t>(uniform01(rng) * 300);
    const double rho = 2.0 * uniform01(rng) - 1.0;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = standard_normal(rng);
      y[i] = rho * x[i] + standard_normal(rng);
    }
    worst = std::max(worst, std::abs(mi_hist(Samples::scalar(x), y, bins) - double_sum_mi(x, y, bins)));
  }
  o.require(worst <= 1e-12, "max |diff| " + fmt("%.2e", worst));
  const double sec = seconds_since(t0);
  o.require(sec < 5.0, fmt("%.2fs", sec));
  return o;
}

// ---- criterion 3 ---------------------------------------------------------

Outcome transfer_entropy_copy() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(31);
  const std::size_t n = 100000;
  std::vector<double> y(n), x(n, 0.0), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = uniform01(rng) < 0.5 ? 0.0 : 1.0;
    z[i] = uniform01(rng) < 0.5 ? 0.0 : 1.0;
  }
  for (std::size_t i = 1; i < n; ++i) x[i] = y[i - 1];
  const double copy = transfer_entropy(y, x, {}).nats;
  const double indep = transfer_entropy(z, y, {}).nats;
  o.require(std::abs(copy - std::numbers::ln2) <= 0.02, "copy " + fmt("%.5f", copy) + " vs ln2");
  o.require(indep <= 0.02, "independent " + fmt("%.5f", indep));
  const double sec = seconds_since(t0);
  o.require(sec < 10.0, fmt("%.2fs", sec));
  return o;
}

// ---- criterion 4 ---------------------------------------------------------

Outcome mi_noise_degradation() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(41);
  HrSeries y;
  y.values.resize(10000);
  double v = 0.0;
  for (double& s : y.values) {
    v = 0.95 * v + 17.0 * std::sqrt(1.0 - 0.95 * 0.95) * standard_normal(rng);
    s = 85.0 + v;
  }
  const MiGrid g = mi_noise_sweep(y, {1, 2, 3, 4, 5}, {0.0, 9.0}, 7);
  std::string cells;
  for (std::size_t i = 0; i < 5; ++i) {
    const bool ok = g.at(i, 1) < g.at(i, 0);
    o.require(ok, "N=" + std::to_string(i + 1) + " " + fmt("%.3f", g.at(i, 0)) + "->" + fmt("%.3f", g.at(i, 1)));
  }
  const double sec = seconds_since(t0);
  o.require(sec < 60.0, fmt("%.1fs", sec));
  return o;
}

// ---- criterion 5 ---------------------------------------------------------

Tensor random_tensor(nn::Shape s, Rng& rng) {
  Tensor t(std::move(s));
  for (double& x : t.data) x = standard_normal(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

// Relative gradient error of <w, layer(x)> over the input and parameters.
double layer_error(Tensor x, const std::function<Tensor(const Tensor&)>& fwd,
                   const std::function<Tensor(const Tensor&)>& bwd, std::vector<Parameter*> params, Rng& rng) {
  Parameter input("input", std::move(x));
  const Tensor w = random_tensor(fwd(input.value).shape, rng);
  params.push_back(&input);
  const auto loss = [&] { return dot(w, fwd(input.value)); };
  const auto grads = [&] {
    for (Parameter* p : params) p->zero_grad();
    fwd(input.value);
    input.grad = bwd(w);
  };
  return nn::grad_check(loss, grads, params).max_rel_error;
}

Outcome gradient_checks() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(51);
  const int n = 3, c_in = 2, c_out = 3, len = 13, h = 4;

  nn::Linear lin("lin", 5, 3);
  lin.init(rng);
  std::vector<Parameter*> lp;
  lin.collect(lp);
  const double e_lin = layer_error(random_tensor({n, 5}, rng), [&](const Tensor& x) { return lin.forward(x); },
                                   [&](const Tensor& d) { return lin.backward(d); }, lp, rng);

  double e_conv = 0.0;
  for (int stride : {1, 2}) {
    nn::Conv1d conv("conv", c_in, c_out, 3, stride);
    conv.init(rng);
    std::vector<Parameter*> cp;
    conv.collect(cp);
    e_conv = std::max(e_conv, layer_error(random_tensor({n, c_in, len}, rng), [&](const Tensor& x) { return conv.forward(x); },
                                          [&](const Tensor& d) { return conv.backward(d); }, cp, rng));
  }

  nn::BatchNorm1d bn("bn", c_in);
  for (double& g : bn.gamma.value.data) g = 0.5 + uniform01(rng);
  for (double& b : bn.beta.value.data) b = standard_normal(rng);
  std::vector<Parameter*> bp;
  bn.collect(bp);
  const double e_bn = layer_error(random_tensor({n, c_in, len}, rng),
                                  [&](const Tensor& x) { return bn.forward(x, nn::Mode::train); },
                                  [&](const Tensor& d) { return bn.backward(d); }, bp, rng);

  nn::ReLU relu;
  const double e_relu = layer_error(random_tensor({n, c_in, len}, rng), [&](const Tensor& x) { return relu.forward(x); },
                                    [&](const Tensor& d) { return relu.backward(d); }, {}, rng);
  nn::MaxPool1d pool(2);
  const double e_pool = layer_error(random_tensor({n, c_in, len}, rng), [&](const Tensor& x) { return pool.forward(x); },
                                    [&](const Tensor& d) { return pool.backward(d); }, {}, rng);

  nn::Lstm lstm("lstm", c_in, h);
  lstm.init(rng);
  std::vector<Parameter*> sp;
  lstm.collect(sp);
  Parameter h0("h0", random_tensor({n, h}, rng)), c0("c0", random_tensor({n, h}, rng));
  sp.push_back(&h0);
  sp.push_back(&c0);
  // The loss only reads h_seq, so no gradient enters through the final state.
  const Tensor wl({n, h}), wc({n, h});
  const double e_lstm = layer_error(
      random_tensor({n, len, c_in}, rng),
      [&](const Tensor& x) {
        const nn::LstmOutput out = lstm.forward(x, h0.value, c0.value);
        return out.h_seq;
      },
      [&](const Tensor& d) {
        const nn::LstmGrads g = lstm.backward(d, wl, wc);
        h0.grad = g.dh0;
        c0.grad = g.dc0;
        return g.dx_seq;
      },
      sp, rng);

  Parameter pred("pred", random_tensor({9}, rng));
  const Tensor target = random_tensor({9}, rng);
  std::vector<Parameter*> pp{&pred};
  const double e_mae = nn::grad_check([&] { return nn::mae_loss(pred.value, target).loss; },
                                      [&] { pred.grad = nn::mae_loss(pred.value, target).grad; }, pp)
                           .max_rel_error;

  nn::GradCheckOptions opts;
  opts.coords_per_tensor = 8;
  double e_model = 0.0;
  for (Conditioning c : {Conditioning::encoder_decoder, Conditioning::mlp_concat, Conditioning::none}) {
    ModelConfig cfg = model_preset("desk");
    cfg.conditioning = c;
    if (c == Conditioning::none) cfg.k_history = 0;
    e_model = std::max(e_model, check_model_gradients(cfg, 53, 2, 128, opts).max_rel_error);
  }

  const std::vector<std::pair<const char*, double>> all{{"linear", e_lin}, {"conv1d", e_conv}, {"batchnorm", e_bn},
                                                        {"relu", e_relu}, {"maxpool", e_pool}, {"lstm", e_lstm},
                                                        {"mae", e_mae}, {"model", e_model}};
  for (const auto& [name, e] : all) o.require(e < 1e-4, std::string(name) + " " + fmt("%.1e", e));
  const double sec = seconds_since(t0);
  o.require(sec < 60.0, fmt("%.1fs", sec));
  return o;
}

// ---- criterion 6 ---------------------------------------------------------

Outcome optimizer_oracles() {
  Outcome o;
  const double lr = 5e-4, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Rng rng(61);
  Parameter p("p", random_tensor({6}, rng));
  const Tensor g = random_tensor({6}, rng);
  const Tensor before = p.value;
  p.grad = g;
  nn::Adam adam({lr, b1, b2, eps, 0.0});
  std::vector<Parameter*> ps{&p};
  adam.step(ps);
  double worst = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double m_hat = (1 - b1) * g.data[i] / (1 - b1);
    const double v_hat = (1 - b2) * g.data[i] * g.data[i] / (1 - b2);
    const double expect = before.data[i] - lr * m_hat / (std::sqrt(v_hat) + eps);
    worst = std::max(worst, std::abs(p.value.data[i] - expect));
  }
  o.require(worst <= 1e-12, "first step |err| " + fmt("%.1e", worst));

  nn::PlateauScheduler plateau(0.1, 10);
  double cur = lr;
  cur = plateau.step(1.0, cur);
  cur = plateau.step(0.99, cur);
  int fired_at = -1;
  for (int stagnant = 1; stagnant <= 15 && fired_at < 0; ++stagnant) {
    const double next = plateau.step(0.99, cur);
    if (next != cur) fired_at = stagnant;
    cur = next;
  }
  o.require(fired_at == 10, "plateau cut at stagnant epoch " + std::to_string(fired_at));

  nn::EarlyStopping stop(30);
  stop.step(1.0);
  int stop_at = -1;
  for (int stagnant = 1; stagnant <= 40 && stop_at < 0; ++stagnant) {
    if (stop.step(1.0)) stop_at = stagnant;
  }
  o.require(stop_at == 30, "early stop at stagnant epoch " + std::to_string(stop_at));
  return o;
}

// ---- criterion 7 ---------------------------------------------------------

Outcome spectral_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<double> maes;
  for (std::uint64_t s = 0; s < 5; ++s) {
    SynthConfig cfg;
    cfg.seed = derive_seed(71, "acceptance:clean", s);
    const PpgSession session = synth_ppg(gen_hr_trajectory(cfg), cfg, "C");
    const std::vector<double> est = spectral_track(session.samples, session.fs_hz, {}, {});
    maes.push_back(mae(est, session.labels));
  }
  const double worst = *std::max_element(maes.begin(), maes.end());
  o.require(worst < 2.0, "worst session MAE " + fmt("%.3f", worst) + " bpm");
  const double sec = seconds_since(t0);
  o.require(sec < 10.0, fmt("%.1fs", sec));
  return o;
}

// ---- criterion 8 ---------------------------------------------------------

Outcome augmentation_statistics() {
  Outcome o;
  // Training pairs from hr_std 17 sessions, every xi perturbed.
  std::vector<SegmentPair> pairs;
  for (std::uint64_t s = 0; s < 12; ++s) {
    SynthConfig cfg;
    cfg.duration_s = 7200.0;
    cfg.fs_hz = 16.0;
    cfg.hr_std_bpm = 17.0;
    cfg.seed = derive_seed(81, "acceptance:aug", s);
    const PpgSession session = synth_ppg(gen_hr_trajectory(cfg), cfg, "A" + std::to_string(s));
    const auto p = make_pairs(session, {}, 5, XiSource::labels);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  const std::vector<SegmentPair> aug = augment_xi(pairs, 1.0, 3.0, 83);
  std::vector<double> noise, clean;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = 0; j < pairs[i].xi.size(); ++j) {
      noise.push_back(aug[i].xi[j] - pairs[i].xi[j]);
      clean.push_back(pairs[i].xi[j]);
    }
  }
  const auto var = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
  };
  const double sd = std::sqrt(var(noise));
  const double snr = var(clean) / var(noise);
  o.require(noise.size() >= 100000, std::to_string(noise.size()) + " perturbed elements");
  o.require(sd >= 2.9 && sd <= 3.1, "noise std " + fmt("%.4f", sd));
  o.require(snr >= 29.0 && snr <= 35.0, "SNR " + fmt("%.2f", snr) + " (HR std " + fmt("%.2f", std::sqrt(var(clean))) + ")");
  return o;
}

// ---- criteria 9-11 -------------------------------------------------------

// Desk-scale recipe: 12 noisy sessions at 16 Hz, a small model and a single
// inner split so three seeds of both variants finish on one core.
std::vector<PpgSession> benchmark_sessions() {
  std::vector<PpgSession> out;
  for (int s = 0; s < 12; ++s) {
    SynthConfig c;
    c.duration_s = 240.0;
    c.fs_hz = 16.0;
    c.artifact_rate = 4.0;
    c.snr_db = 5.0;
    c.seed = derive_seed(100, "bench:session", static_cast<std::uint64_t>(s));
    out.push_back(synth_ppg(gen_hr_trajectory(c), c, "s" + std::to_string(s)));
  }
  return out;
}

LosoConfig benchmark_config(bool conditioned, std::uint64_t seed) {
  LosoConfig cfg;
  cfg.model.conv_channels = {8, 16};
  cfg.model.conv_kernels = {5, 5};
  cfg.model.xi_embed_dim = 16;
  cfg.model.encoder_hidden = 16;
  cfg.model.decoder_hidden = 16;
  cfg.model.conditioning = conditioned ? Conditioning::encoder_decoder : Conditioning::none;
  cfg.model.k_history = conditioned ? 5 : 0;
  cfg.train.k_history = cfg.model.k_history;
  cfg.train.augment = conditioned;
  cfg.train.max_epochs = 50;
  cfg.train.lr = 6e-3;
  cfg.train.inner_folds = 1;
  cfg.train.early_stop_patience = 15;
  cfg.train.plateau_patience = 5;
  cfg.train.seed = seed;
  cfg.jobs = 1;
  return cfg;
}

struct BenchmarkRun {
  std::vector<double> none_mae, cond_mae;
  std::vector<LosoResult> results;
  double seconds = 0.0;
};

BenchmarkRun run_benchmark(const std::vector<PpgSession>& sessions) {
  BenchmarkRun b;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (bool conditioned : {false, true}) {
      LosoResult r = run_loso(sessions, benchmark_config(conditioned, seed));
      (conditioned ? b.cond_mae : b.none_mae).push_back(r.report.mae_mean);
      std::printf("  seed %llu %-28s LOSO MAE %.4f bpm\n", static_cast<unsigned long long>(seed),
                  conditioned ? "encoder_decoder+augmentation" : "none", r.report.mae_mean);
      std::fflush(stdout);
      b.results.push_back(std::move(r));
    }
  }
  b.seconds = seconds_since(t0);
  return b;
}

double average(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome desk_benchmark(const BenchmarkRun& b) {
  Outcome o;
  const double none = average(b.none_mae), cond = average(b.cond_mae);
  const double gain = 1.0 - cond / none;
  o.require(gain >= 0.10, "none " + fmt("%.3f", none) + " vs encoder_decoder+aug " + fmt("%.3f", cond) +
                              " bpm, " + fmt("%.1f", 100.0 * gain) + "% lower");
  o.require(b.seconds < 1800.0, fmt("%.0fs", b.seconds));
  return o;
}

Outcome leakage(const BenchmarkRun& b, const std::vector<PpgSession>& sessions) {
  Outcome o;
  std::size_t folds = 0, clean = 0, reads = 0;
  for (const LosoResult& r : b.results) {
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
      const FoldOutcome& fo = r.folds[f];
      ++folds;
      const bool ok = fo.leakage_free && fo.test_session == sessions[f].subject_id &&
                      fo.label_reads_during_prediction == 0;
      if (ok) ++clean;
      reads += fo.label_reads_during_prediction;
    }
  }
  // Fold layout: each session tested once, never in its own training set.
  const auto layout = loso_folds(sessions.size());
  bool partition = layout.size() == sessions.size();
  std::set<int> tests;
  for (const Fold& f : layout) {
    tests.insert(f.test);
    partition = partition && std::find(f.train.begin(), f.train.end(), f.test) == f.train.end();
  }
  partition = partition && tests.size() == sessions.size();
  o.require(folds == 72 && clean == folds, std::to_string(clean) + "/" + std::to_string(folds) + " folds disjoint");
  o.require(reads == 0, std::to_string(reads) + " label reads during prediction");
  o.require(partition, "fold partition");
  return o;
}

Outcome determinism(const BenchmarkRun& a, const BenchmarkRun& b) {
  Outcome o;
  std::size_t same = 0, total = 0;
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    const auto& fa = a.results[i].folds;
    const auto& fb = b.results[i].folds;
    for (std::size_t f = 0; f < fa.size(); ++f) {
      ++total;
      if (f < fb.size() && fa[f].mae_bpm == fb[f].mae_bpm && fa[f].predictions == fb[f].predictions) ++same;
    }
  }
  const bool means = a.none_mae == b.none_mae && a.cond_mae == b.cond_mae;
  o.require(same == total && means, std::to_string(same) + "/" + std::to_string(total) + " fold MAEs bit-identical");
  return o;
}

}  // namespace

int main() {
  std::vector<std::pair<int, Outcome>> results;
  const auto report = [&](int id, Outcome o) {
    std::printf("criterion %2d: %s | %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    results.emplace_back(id, std::move(o));
  };

  report(1, analytic_mi());
  report(2, brute_force_mi());
  report(3, transfer_entropy_copy());
  report(4, mi_noise_degradation());
  report(5, gradient_checks());
  report(6, optimizer_oracles());
  report(7, spectral_oracle());
  report(8, augmentation_statistics());

  const std::vector<PpgSession> sessions = benchmark_sessions();
  std::printf("desk benchmark, run 1\n");
  const BenchmarkRun first = run_benchmark(sessions);
  report(9, desk_benchmark(first));
  report(10, leakage(first, sessions));
  std::printf("desk benchmark, run 2 (same seeds)\n");
  const BenchmarkRun second = run_benchmark(sessions);
  report(11, determinism(first, second));

  std::size_t failed = 0;
  for (const auto& [id, o] : results) failed += o.pass ? 0 : 1;
  std::printf("%zu/%zu criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
