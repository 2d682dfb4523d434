#include "hrdyn/harness.hpp"

#include "hrdyn/error.hpp"
#include "hrdyn/infodyn.hpp"
#include "hrdyn/log.hpp"
#include "hrdyn/nn/loss.hpp"
#include "hrdyn/nn/optim.hpp"
#include "hrdyn/parallel.hpp"
#include "hrdyn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <utility>

namespace hrdyn {

namespace {

using nn::Tensor;

// Fisher-Yates on our own uniform draws so the order does not depend on the
// standard library's distribution implementations.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

struct Batch {
  Tensor x;
  Tensor xi;      // scaled
  Tensor target;  // scaled
};

Batch make_batch(const std::vector<const SegmentPair*>& pairs, int k) {
  const int n = static_cast<int>(pairs.size());
  const int len = static_cast<int>(pairs.front()->x.values.size());
  Batch b{Tensor({n, len}), Tensor({n, k}), Tensor({n})};
  for (int i = 0; i < n; ++i) {
    const SegmentPair& p = *pairs[static_cast<std::size_t>(i)];
    if (static_cast<int>(p.x.values.size()) != len) {
      throw ShapeError("segments in a batch must share one length");
    }
    std::copy(p.x.values.begin(), p.x.values.end(), b.x.data.begin() + std::ptrdiff_t{i} * len);
    for (int j = 0; j < k; ++j) {
      b.xi.data[static_cast<std::size_t>(i * k + j)] = xi_scale(p.xi[static_cast<std::size_t>(j)]);
    }
    b.target.data[static_cast<std::size_t>(i)] = xi_scale(p.y);
  }
  return b;
}

int xi_len(const ModelConfig& cfg) {
  return cfg.conditioning == Conditioning::none ? 0 : cfg.k_history;
}

double eval_mae(const HrModel& model, const std::vector<SegmentPair>& pairs) {
  const std::vector<double> pred = predict_pairs(model, pairs);
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) sum += std::abs(pred[i] - pairs[i].y);
  return sum / static_cast<double>(pairs.size());
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(cfg.lr > 0.0)) throw ConfigError("lr must be positive");
  if (cfg.weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (cfg.plateau_patience <= 0 || cfg.early_stop_patience <= 0) {
    throw ConfigError("patience values must be positive");
  }
  if (!(cfg.plateau_factor > 0.0 && cfg.plateau_factor < 1.0)) {
    throw ConfigError("plateau_factor must lie in (0, 1)");
  }
  if (!(cfg.aug_fraction >= 0.0 && cfg.aug_fraction <= 1.0)) {
    throw ConfigError("aug_fraction must lie in [0, 1]");
  }
  if (cfg.aug_sigma < 0.0) throw ConfigError("aug_sigma must be non-negative");
  if (cfg.k_history < 0) throw ConfigError("k_history must be non-negative");
  if (cfg.max_epochs <= 0) throw ConfigError("max_epochs must be positive");
  if (cfg.inner_folds < 1 || cfg.inner_folds > 3) throw ConfigError("inner_folds must be 1, 2 or 3");
}

std::vector<SegmentPair> make_pairs(std::span<const Segment> segments, std::span<const double> labels,
                                    std::span<const double> xi_series, int k,
                                    const std::string& session_id) {
  if (k < 0) throw ConfigError("k must be non-negative");
  std::vector<SegmentPair> out;
  const auto ku = static_cast<std::size_t>(k);
  for (const Segment& s : segments) {
    const auto idx = static_cast<std::size_t>(s.index);
    if (idx < ku) continue;
    if (idx >= labels.size() || idx > xi_series.size()) {
      throw InputError("session " + session_id + ": no label for segment " + std::to_string(idx));
    }
    SegmentPair p;
    p.x = s;
    p.xi.assign(xi_series.begin() + static_cast<std::ptrdiff_t>(idx - ku),
                xi_series.begin() + static_cast<std::ptrdiff_t>(idx));
    for (double v : p.xi) {
      if (!std::isfinite(v)) throw InputError("session " + session_id + ": non-finite xi value");
    }
    p.y = labels[idx];
    p.session_id = session_id;
    p.segment_index = s.index;
    out.push_back(std::move(p));
  }
  if (out.empty()) {
    log::warn("session " + session_id + " is shorter than " + std::to_string(k + 1) +
              " segments; no pairs");
  }
  return out;
}

std::vector<SegmentPair> make_pairs(const PpgSession& session, const SegmentationConfig& seg, int k,
                                    XiSource xi_source, std::span<const double> predictions) {
  if (session.labels.empty()) throw InputError("session " + session.subject_id + " has no labels");
  const std::vector<Segment> segments = segment(session, seg);
  std::span<const double> xi_series = session.labels;
  if (xi_source == XiSource::predictions) xi_series = predictions;
  return make_pairs(segments, session.labels, xi_series, k, session.subject_id);
}

std::vector<SegmentPair> augment_xi(std::vector<SegmentPair> pairs, double fraction, double sigma,
                                    std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in [0, 1]");
  const auto n_sel =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pairs.size())));
  if (n_sel == 0) return pairs;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng pick = make_rng(seed, "harness:augment_pick");
  shuffle(order, pick);
  Rng noise = make_rng(seed, "harness:augment_noise");
  for (std::size_t i = 0; i < n_sel; ++i) {
    for (double& v : pairs[order[i]].xi) v += sigma * standard_normal(noise);
  }
  return pairs;
}

std::vector<Fold> loso_folds(std::size_t session_count) {
  if (session_count < 2) throw ConfigError("leave-one-session-out needs at least 2 sessions");
  std::vector<Fold> folds(session_count);
  for (std::size_t t = 0; t < session_count; ++t) {
    folds[t].test = static_cast<int>(t);
    for (std::size_t s = 0; s < session_count; ++s) {
      if (s != t) folds[t].train.push_back(static_cast<int>(s));
    }
  }
  return folds;
}

std::vector<InnerSplit> inner_cv_split(const std::vector<int>& train_sessions, std::uint64_t seed) {
  if (train_sessions.size() < 3) {
    log::warn("fewer than 3 training sessions; using one 80/20 segment-level split");
    InnerSplit s;
    s.train = train_sessions;
    s.segment_level = true;
    return {s};
  }
  std::vector<int> order = train_sessions;
  Rng rng = make_rng(seed, "harness:inner_cv");
  shuffle(order, rng);
  std::vector<std::vector<int>> parts(3);
  for (std::size_t i = 0; i < order.size(); ++i) parts[i % 3].push_back(order[i]);
  std::vector<InnerSplit> out(3);
  for (std::size_t v = 0; v < 3; ++v) {
    out[v].val = parts[v];
    for (std::size_t p = 0; p < 3; ++p) {
      if (p != v) out[v].train.insert(out[v].train.end(), parts[p].begin(), parts[p].end());
    }
    std::sort(out[v].train.begin(), out[v].train.end());
    std::sort(out[v].val.begin(), out[v].val.end());
  }
  return out;
}

std::vector<double> predict_pairs(const HrModel& model, const std::vector<SegmentPair>& pairs,
                                  int batch_size) {
  std::vector<double> out;
  out.reserve(pairs.size());
  HrModel scratch = model;
  const int k = xi_len(model.config());
  for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(pairs.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const SegmentPair*> chunk;
    for (std::size_t i = start; i < end; ++i) chunk.push_back(&pairs[i]);
    const Batch b = make_batch(chunk, k);
    const Tensor y = scratch.forward(b.x, b.xi, nn::Mode::eval);
    for (double v : y.data) out.push_back(xi_unscale(v));
  }
  return out;
}

TrainResult train(const std::vector<SegmentPair>& train_pairs,
                  const std::vector<SegmentPair>& val_pairs, const ModelConfig& model_cfg,
                  const TrainConfig& cfg) {
  validate(cfg);
  if (train_pairs.empty() || val_pairs.empty()) {
    throw ConfigError("training needs non-empty train and validation pairs");
  }
  const int k = xi_len(model_cfg);

  HrModel model = HrModel::build(model_cfg, derive_seed(cfg.seed, "harness:init"));
  nn::Adam adam({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  nn::PlateauScheduler plateau(cfg.plateau_factor, cfg.plateau_patience);
  nn::EarlyStopping stopper(cfg.early_stop_patience);

  TrainResult res{model, {}, -1, 0.0, false, {}};
  const std::vector<nn::Parameter*> params = model.parameters();

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::vector<SegmentPair> augmented;
    const std::vector<SegmentPair>* epoch_pairs = &train_pairs;
    if (cfg.augment && cfg.aug_fraction > 0.0 && k > 0) {
      augmented = augment_xi(train_pairs, cfg.aug_fraction, cfg.aug_sigma,
                             derive_seed(cfg.seed, "harness:augment", static_cast<std::uint64_t>(epoch)));
      epoch_pairs = &augmented;
    }
    std::vector<std::size_t> order(epoch_pairs->size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(cfg.seed, "harness:shuffle", static_cast<std::uint64_t>(epoch));
    shuffle(order, rng);

    double abs_sum = 0.0;
    bool failed = false;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < order.size() && !failed; start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      std::vector<const SegmentPair*> chunk;
      for (std::size_t i = start; i < end; ++i) chunk.push_back(&(*epoch_pairs)[order[i]]);
      const Batch b = make_batch(chunk, k);
      model.zero_grad();
      const Tensor pred = model.forward(b.x, b.xi, nn::Mode::train);
      const nn::LossResult loss = nn::mae_loss(pred, b.target);
      if (!std::isfinite(loss.loss)) {
        res.diagnostic = "non-finite training loss at epoch " + std::to_string(epoch);
        failed = true;
        break;
      }
      model.backward(loss.grad);
      try {
        adam.step(params);
      } catch (const NumericError& e) {
        res.diagnostic = "epoch " + std::to_string(epoch) + ": " + e.what();
        failed = true;
        break;
      }
      abs_sum += loss.loss * 60.0 * static_cast<double>(end - start);
    }
    if (failed) {
      res.aborted = true;
      log::warn("training aborted: " + res.diagnostic);
      break;
    }

    const double train_mae = abs_sum / static_cast<double>(order.size());
    const double val_mae = eval_mae(model, val_pairs);
    res.history.push_back({epoch, train_mae, val_mae, adam.lr()});
    if (!std::isfinite(val_mae)) {
      res.aborted = true;
      res.diagnostic = "non-finite validation MAE at epoch " + std::to_string(epoch);
      log::warn("training aborted: " + res.diagnostic);
      break;
    }
    if (res.best_epoch < 0 || val_mae < res.best_val_mae) {
      res.best_epoch = epoch;
      res.best_val_mae = val_mae;
      res.model = model;
    }
    adam.set_lr(plateau.step(val_mae, adam.lr()));
    if (stopper.step(val_mae)) {
      log::info("early stop after epoch " + std::to_string(epoch));
      break;
    }
  }
  return res;
}

std::vector<double> spectral_track(std::span<const double> samples, double fs_hz,
                                   const SegmentationConfig& seg, const SpectralConfig& spectral) {
  AutoregressiveConfig cfg;
  cfg.k_history = 0;
  cfg.segmentation = seg;
  cfg.spectral = spectral;
  struct Raw final : SignalSource {
    std::string id = "track";
    double fs;
    std::span<const double> x;
    const std::string& subject_id() const override { return id; }
    double fs_hz() const override { return fs; }
    std::span<const double> samples() const override { return x; }
  } src;
  src.fs = fs_hz;
  src.x = samples;
  SpectralConfig sc = spectral;
  sc.fs_hz = fs_hz;
  const HrPredictor fft = [&sc](std::span<const double> x, std::span<const double>) {
    return estimate_hr_fft(x, sc);
  };
  return autoregressive_eval(fft, src, cfg).predictions;
}

AutoregressiveResult autoregressive_eval(const HrPredictor& predictor, const SignalSource& session,
                                         const AutoregressiveConfig& cfg) {
  if (cfg.k_history < 0) throw ConfigError("k_history must be non-negative");
  const double fs = session.fs_hz();
  const std::span<const double> samples = session.samples();
  const std::size_t win = samples_for(cfg.segmentation.window_s, fs, "window");
  const std::size_t hop = samples_for(cfg.segmentation.hop_s, fs, "hop");
  const std::size_t count = segment_count(samples.size(), win, hop);

  const std::vector<Segment> segs = segment_samples(samples, fs, cfg.segmentation);
  std::vector<const Segment*> by_index(count, nullptr);
  for (const Segment& s : segs) by_index[static_cast<std::size_t>(s.index)] = &s;

  SpectralConfig spec = cfg.spectral;
  spec.fs_hz = fs;
  const int k = cfg.k_history;
  const int boot = k == 0 ? 0 : (cfg.bootstrap_segments < 0 ? k : cfg.bootstrap_segments);

  AutoregressiveResult res;
  res.bootstrap_segments = boot;
  res.predictions.assign(count, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> xi(static_cast<std::size_t>(k));

  // Segments before the first usable one have nothing to carry forward; they
  // take the first available estimate once it exists.
  auto backfill = [&](std::size_t upto) {
    for (std::size_t j = 0; j < upto; ++j) {
      if (std::isnan(res.predictions[j])) res.predictions[j] = res.predictions[upto];
    }
  };
  bool have_any = false;

  for (std::size_t i = 0; i < count; ++i) {
    const Segment* s = by_index[i];
    if (s == nullptr) {
      res.carried_forward.push_back(static_cast<int>(i));
      if (have_any) res.predictions[i] = res.predictions[i - 1];
      continue;
    }
    if (static_cast<int>(i) < boot) {
      res.predictions[i] = estimate_hr_fft(s->values, spec);
    } else {
      if (k > 0 && !have_any) {
        res.predictions[i] = estimate_hr_fft(s->values, spec);
      } else {
        for (int j = 0; j < k; ++j) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(i) - k + j;
          xi[static_cast<std::size_t>(j)] = res.predictions[pos < 0 ? 0 : static_cast<std::size_t>(pos)];
        }
        res.predictions[i] = predictor(s->values, xi);
      }
    }
    if (!have_any) {
      have_any = true;
      backfill(i);
    }
  }
  if (!have_any && count > 0) throw DegenerateSegmentError("every segment of the session is flat");
  return res;
}

AutoregressiveResult autoregressive_eval(const HrModel& model, const SignalSource& session,
                                         const AutoregressiveConfig& cfg) {
  if (cfg.k_history != xi_len(model.config())) {
    throw ConfigError("autoregressive k_history does not match the model's xi length");
  }
  HrModel scratch = model;
  const HrPredictor predictor = [&scratch](std::span<const double> x, std::span<const double> xi) {
    Tensor xt({1, static_cast<int>(x.size())});
    std::copy(x.begin(), x.end(), xt.data.begin());
    Tensor xit({1, static_cast<int>(xi.size())});
    for (std::size_t j = 0; j < xi.size(); ++j) xit.data[j] = xi_scale(xi[j]);
    return xi_unscale(scratch.forward(xt, xit, nn::Mode::eval).data[0]);
  };
  return autoregressive_eval(predictor, session, cfg);
}

namespace {

AutoregressiveConfig ar_config(const LosoConfig& cfg) {
  AutoregressiveConfig ar;
  ar.k_history = xi_len(cfg.model);
  ar.bootstrap_segments = cfg.bootstrap_segments;
  ar.segmentation = cfg.segmentation;
  ar.spectral = cfg.spectral;
  return ar;
}

void collect_pairs(const std::vector<std::vector<SegmentPair>>& per_session,
                   const std::vector<int>& ids, std::vector<SegmentPair>& out) {
  for (int id : ids) {
    const auto& src = per_session[static_cast<std::size_t>(id)];
    out.insert(out.end(), src.begin(), src.end());
  }
}

void fill_report(EvalReport& report, const std::vector<FoldOutcome>& folds) {
  std::vector<double> all_pred, all_lab;
  for (const FoldOutcome& f : folds) {
    report.per_session.push_back(
        {f.test_session, f.mae_bpm, static_cast<int>(f.predictions.size())});
    all_pred.insert(all_pred.end(), f.predictions.begin(), f.predictions.end());
    all_lab.insert(all_lab.end(), f.labels.begin(), f.labels.end());
  }
  finalize(report);
  if (all_pred.size() >= 2) {
    report.bland_altman_rows = bland_altman(all_pred, all_lab).rows;
    report.pearson_r = pearson(all_pred, all_lab);
  }
}

FoldOutcome score_session(const HrModel& model, const PpgSession& session, const LosoConfig& cfg) {
  TrackedSession tracked(session);
  const AutoregressiveResult ar = autoregressive_eval(model, tracked, ar_config(cfg));
  FoldOutcome out;
  out.test_session = session.subject_id;
  out.label_reads_during_prediction = tracked.label_reads();
  const std::span<const double> labels = tracked.labels();
  if (labels.size() != ar.predictions.size()) {
    throw InputError("session " + session.subject_id + ": label count does not match segments");
  }
  out.predictions = ar.predictions;
  out.labels.assign(labels.begin(), labels.end());
  out.mae_bpm = mae(out.predictions, out.labels);
  return out;
}

}  // namespace

namespace {

std::vector<std::vector<SegmentPair>> build_pairs(const std::vector<PpgSession>& sessions,
                                                  const LosoConfig& cfg) {
  const int k = xi_len(cfg.model);
  std::vector<std::vector<SegmentPair>> out(sessions.size());
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (cfg.train.xi_train_source == XiSource::labels) {
      out[i] = make_pairs(sessions[i], cfg.segmentation, k, XiSource::labels);
    } else {
      const std::vector<double> track = spectral_track(sessions[i].samples, sessions[i].fs_hz,
                                                       cfg.segmentation, cfg.spectral);
      out[i] = make_pairs(sessions[i], cfg.segmentation, k, XiSource::predictions, track);
    }
  }
  return out;
}

void check_inputs(const std::vector<PpgSession>& sessions, const LosoConfig& cfg) {
  validate(cfg.model);
  validate(cfg.train);
  if (cfg.model.conditioning != Conditioning::none && cfg.train.k_history != cfg.model.k_history) {
    throw ConfigError("train k_history must equal the model's k_history");
  }
  std::set<std::string> ids;
  for (const PpgSession& s : sessions) {
    validate_session(s);
    if (!ids.insert(s.subject_id).second) throw InputError("duplicate session id " + s.subject_id);
  }
}

SelectedModel select_model(const std::vector<std::vector<SegmentPair>>& per_session,
                           const std::vector<int>& ids, const LosoConfig& cfg,
                           std::uint64_t stream) {
  const std::vector<InnerSplit> splits =
      inner_cv_split(ids, derive_seed(cfg.train.seed, "harness:inner", stream));
  const std::size_t n_splits =
      std::min(splits.size(), static_cast<std::size_t>(cfg.train.inner_folds));

  std::optional<SelectedModel> best;
  std::set<std::string> seen;
  for (std::size_t si = 0; si < n_splits; ++si) {
    const InnerSplit& split = splits[si];
    std::vector<SegmentPair> tr, va;
    if (split.segment_level) {
      std::vector<SegmentPair> all;
      collect_pairs(per_session, split.train, all);
      Rng rng = make_rng(cfg.train.seed, "harness:segment_split", stream);
      shuffle(all, rng);
      const auto n_val = std::max<std::size_t>(1, all.size() / 5);
      va.assign(std::make_move_iterator(all.begin()),
                std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_val)));
      tr.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_val)),
                std::make_move_iterator(all.end()));
    } else {
      collect_pairs(per_session, split.train, tr);
      collect_pairs(per_session, split.val, va);
    }
    for (const auto* set : {&tr, &va}) {
      for (const SegmentPair& p : *set) seen.insert(p.session_id);
    }

    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.train.seed, "harness:train", stream * 16 + si);
    TrainResult r = train(tr, va, cfg.model, tc);
    if (!best || r.best_val_mae < best->result.best_val_mae) {
      best = SelectedModel{std::move(r), tr.size(), va.size(), {}};
    }
  }
  best->sessions_seen = std::move(seen);
  return std::move(*best);
}

}  // namespace

SelectedModel train_with_inner_cv(const std::vector<PpgSession>& sessions, const LosoConfig& cfg) {
  check_inputs(sessions, cfg);
  if (sessions.size() < 2) throw ConfigError("training needs at least 2 sessions");
  std::vector<int> ids(sessions.size());
  std::iota(ids.begin(), ids.end(), 0);
  return select_model(build_pairs(sessions, cfg), ids, cfg, 0);
}

LosoResult run_loso(const std::vector<PpgSession>& sessions, const LosoConfig& cfg) {
  check_inputs(sessions, cfg);
  const int k = xi_len(cfg.model);
  const std::vector<Fold> folds = loso_folds(sessions.size());
  const std::vector<std::vector<SegmentPair>> per_session = build_pairs(sessions, cfg);

  LosoResult result;
  result.folds.resize(folds.size());
  parallel_for(folds.size(), cfg.jobs, [&](std::size_t f) {
    const Fold& fold = folds[f];
    const PpgSession& test = sessions[static_cast<std::size_t>(fold.test)];
    SelectedModel sel = select_model(per_session, fold.train, cfg, f);
    const bool leak_free = sel.sessions_seen.count(test.subject_id) == 0;
    if (!leak_free) throw Error("fold " + std::to_string(f) + ": test session leaked into training");

    FoldOutcome out = score_session(sel.result.model, test, cfg);
    out.train_pairs = sel.train_pairs;
    out.val_pairs = sel.val_pairs;
    out.leakage_free = leak_free;
    out.best_epoch = sel.result.best_epoch;
    out.epochs_run = static_cast<int>(sel.result.history.size());
    out.best_val_mae = sel.result.best_val_mae;
    result.folds[f] = std::move(out);
  });

  fill_report(result.report, result.folds);
  result.report.metadata = {{"protocol", "loso"},
                            {"conditioning", to_string(cfg.model.conditioning)},
                            {"k_history", k},
                            {"augment", cfg.train.augment},
                            {"seed", cfg.train.seed}};
  return result;
}

LosoResult evaluate_sessions(const HrModel& model, const std::vector<PpgSession>& sessions,
                             const LosoConfig& cfg) {
  LosoResult result;
  result.folds.resize(sessions.size());
  parallel_for(sessions.size(), cfg.jobs, [&](std::size_t i) {
    validate_session(sessions[i]);
    result.folds[i] = score_session(model, sessions[i], cfg);
  });
  fill_report(result.report, result.folds);
  result.report.metadata = {{"protocol", "evaluate"},
                            {"conditioning", to_string(model.config().conditioning)},
                            {"k_history", xi_len(model.config())}};
  return result;
}

std::vector<AblationCell> default_ablation_matrix() {
  return {
      {Conditioning::none, 0, false},
      {Conditioning::encoder_decoder, 5, false},
      {Conditioning::encoder_decoder, 5, true},
      {Conditioning::encoder_decoder, 3, true},
      {Conditioning::encoder_decoder, 5, true},
      {Conditioning::encoder_decoder, 7, true},
  };
}

std::vector<AblationCell> ablation_grid(const std::vector<Conditioning>& conditionings,
                                        const std::vector<bool>& augment,
                                        const std::vector<int>& ks) {
  std::vector<AblationCell> out;
  for (Conditioning c : conditionings) {
    for (bool aug : augment) {
      if (c == Conditioning::none) {
        out.push_back({c, 0, aug});
        continue;
      }
      for (int k : ks) out.push_back({c, k, aug});
    }
  }
  return out;
}

std::vector<AblationRow> run_ablation(const std::vector<PpgSession>& sessions,
                                      const std::vector<AblationCell>& matrix,
                                      const LosoConfig& base, const std::string& dataset) {
  std::vector<AblationRow> rows;
  for (const AblationCell& cell : matrix) {
    LosoConfig cfg = base;
    cfg.model.conditioning = cell.conditioning;
    const int k = cell.conditioning == Conditioning::none ? 0 : cell.k;
    cfg.model.k_history = k;
    cfg.train.k_history = k;
    cfg.train.augment = cell.augment;
    log::info("ablation cell " + to_string(cell.conditioning) + " k=" + std::to_string(k) +
              (cell.augment ? " aug" : " no-aug"));
    const LosoResult r = run_loso(sessions, cfg);
    rows.push_back({to_string(cell.conditioning), k, cell.augment, dataset, r.report.mae_mean,
                    r.report.mae_std});
  }
  return rows;
}

void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows) {
  os << "variant,k,aug,dataset,mae_mean,mae_std\n";
  char buf[64];
  for (const AblationRow& r : rows) {
    os << r.variant << ',' << r.k << ',' << (r.augment ? "on" : "off") << ',' << r.dataset << ',';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.mae_mean, r.mae_std);
    os << buf << '\n';
  }
}

}  // namespace hrdyn
