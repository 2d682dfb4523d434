#pragma once

#include "hrdyn/model.hpp"
#include "hrdyn/report.hpp"
#include "hrdyn/signal.hpp"
#include "hrdyn/spectral.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace hrdyn {

// One training example: PPG window, the K preceding HR values (oldest
// first, bpm) and the target HR.
struct SegmentPair {
  Segment x;
  std::vector<double> xi;
  double y = 0.0;
  std::string session_id;
  int segment_index = 0;
};

enum class XiSource { labels, predictions };

struct TrainConfig {
  int batch_size = 32;
  double lr = 5e-4;
  double weight_decay = 1e-6;
  int plateau_patience = 10;
  double plateau_factor = 0.1;
  int early_stop_patience = 30;
  bool augment = true;
  double aug_fraction = 0.1;
  double aug_sigma = 3.0;
  int k_history = 5;
  std::uint64_t seed = 0;
  int max_epochs = 500;
  // Inner splits actually trained (of the 3 produced by inner_cv_split).
  int inner_folds = 3;
  // predictions: training xi comes from the spectral track instead of labels.
  XiSource xi_train_source = XiSource::labels;
};

void validate(const TrainConfig& cfg);

// Pairs for every segment with index >= K. `xi_series` supplies the history
// values (ground-truth labels for teacher forcing, or a prediction series);
// `labels` supplies the targets. Segments missing from `segments` (dropped as
// flat) produce no pair.
std::vector<SegmentPair> make_pairs(std::span<const Segment> segments, std::span<const double> labels,
                                    std::span<const double> xi_series, int k,
                                    const std::string& session_id);

// Segments the session and builds pairs with xi from its labels, or from
// `predictions` when xi_source == predictions.
std::vector<SegmentPair> make_pairs(const PpgSession& session, const SegmentationConfig& seg, int k,
                                    XiSource xi_source,
                                    std::span<const double> predictions = {});

// Selects round(fraction * count) pairs without replacement and adds
// sigma * N(0, 1) to every element of their xi. Targets and PPG untouched.
std::vector<SegmentPair> augment_xi(std::vector<SegmentPair> pairs, double fraction, double sigma,
                                    std::uint64_t seed);

struct Fold {
  int test = 0;
  std::vector<int> train;
};

// Leave-one-session-out: one fold per session.
std::vector<Fold> loso_folds(std::size_t session_count);

struct InnerSplit {
  std::vector<int> train;
  std::vector<int> val;
  // Fewer than 3 sessions: a single 80/20 split over segments of all
  // training sessions instead of a session-level split.
  bool segment_level = false;
};

// Shuffles the training sessions (seeded) and deals them into 3 parts; each
// split validates on one part and trains on the other two.
std::vector<InnerSplit> inner_cv_split(const std::vector<int>& train_sessions, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double train_mae = 0.0;  // bpm
  double val_mae = 0.0;    // bpm
  double lr = 0.0;
};

struct TrainResult {
  HrModel model;
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_val_mae = 0.0;
  bool aborted = false;
  std::string diagnostic;
};

// Mini-batch Adam on MAE with the plateau scheduler and early stopping;
// returns the parameters with the lowest validation MAE.
TrainResult train(const std::vector<SegmentPair>& train_pairs,
                  const std::vector<SegmentPair>& val_pairs, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);

// Eval-mode predictions (bpm) for the pairs, teacher-forced xi.
std::vector<double> predict_pairs(const HrModel& model, const std::vector<SegmentPair>& pairs,
                                  int batch_size = 64);

// What inference may see of a session: signal only.
class SignalSource {
 public:
  virtual ~SignalSource() = default;
  virtual const std::string& subject_id() const = 0;
  virtual double fs_hz() const = 0;
  virtual std::span<const double> samples() const = 0;
};

// Session wrapper that counts label reads.
class TrackedSession final : public SignalSource {
 public:
  explicit TrackedSession(const PpgSession& s) : session_(&s) {}
  const std::string& subject_id() const override { return session_->subject_id; }
  double fs_hz() const override { return session_->fs_hz; }
  std::span<const double> samples() const override { return session_->samples; }
  std::span<const double> labels() const {
    ++label_reads_;
    return session_->labels;
  }
  std::size_t label_reads() const { return label_reads_; }

 private:
  const PpgSession* session_;
  mutable std::size_t label_reads_ = 0;
};

// Per-segment spectral HR estimate for a whole recording; flat segments
// repeat the previous estimate (or the next one at the start).
std::vector<double> spectral_track(std::span<const double> samples, double fs_hz,
                                   const SegmentationConfig& seg, const SpectralConfig& spectral);

struct AutoregressiveConfig {
  int k_history = 5;
  int bootstrap_segments = -1;  // < 0 means k_history
  SegmentationConfig segmentation;
  SpectralConfig spectral;      // fs_hz is taken from the session
};

struct AutoregressiveResult {
  std::vector<double> predictions;     // one per segment
  std::vector<int> carried_forward;    // flat segments that reused the previous value
  int bootstrap_segments = 0;
};

// Maps (normalized segment, xi in bpm oldest first) to a bpm estimate.
using HrPredictor = std::function<double(std::span<const double>, std::span<const double>)>;

// The first B segments come from the spectral estimate; each later segment
// is predicted with xi built from the previous K outputs. When B < K the
// missing history repeats the earliest estimate. k_history == 0 skips the
// bootstrap entirely.
AutoregressiveResult autoregressive_eval(const HrPredictor& predictor, const SignalSource& session,
                                         const AutoregressiveConfig& cfg);
AutoregressiveResult autoregressive_eval(const HrModel& model, const SignalSource& session,
                                         const AutoregressiveConfig& cfg);

struct LosoConfig {
  ModelConfig model;
  TrainConfig train;
  SegmentationConfig segmentation;
  SpectralConfig spectral;
  int bootstrap_segments = -1;
  int jobs = 1;
};

struct FoldOutcome {
  std::string test_session;
  double mae_bpm = 0.0;
  std::vector<double> predictions;
  std::vector<double> labels;
  std::size_t train_pairs = 0;
  std::size_t val_pairs = 0;
  bool leakage_free = false;
  std::size_t label_reads_during_prediction = 0;
  int best_epoch = -1;
  int epochs_run = 0;
  double best_val_mae = 0.0;
};

struct LosoResult {
  EvalReport report;
  std::vector<FoldOutcome> folds;
};

LosoResult run_loso(const std::vector<PpgSession>& sessions, const LosoConfig& cfg);

struct SelectedModel {
  TrainResult result;
  std::size_t train_pairs = 0;
  std::size_t val_pairs = 0;
  std::set<std::string> sessions_seen;  // sessions contributing train or validation pairs
};

// Trains one model per inner split (up to cfg.train.inner_folds) over all
// given sessions and keeps the one with the lowest validation MAE.
SelectedModel train_with_inner_cv(const std::vector<PpgSession>& sessions, const LosoConfig& cfg);

// Scores an already trained model on every session (no training).
LosoResult evaluate_sessions(const HrModel& model, const std::vector<PpgSession>& sessions,
                             const LosoConfig& cfg);

struct AblationCell {
  Conditioning conditioning = Conditioning::encoder_decoder;
  int k = 5;
  bool augment = true;
};

struct AblationRow {
  std::string variant;
  int k = 0;
  bool augment = false;
  std::string dataset;
  double mae_mean = 0.0;
  double mae_std = 0.0;
};

// Model variants (traditional, + HR history, + augmentation) followed by the
// xi-length rows K = 3, 5, 7.
std::vector<AblationCell> default_ablation_matrix();

// Cross product of the given axes; conditioning `none` collapses to one
// cell per augmentation setting with k = 0.
std::vector<AblationCell> ablation_grid(const std::vector<Conditioning>& conditionings,
                                        const std::vector<bool>& augment,
                                        const std::vector<int>& ks);

std::vector<AblationRow> run_ablation(const std::vector<PpgSession>& sessions,
                                      const std::vector<AblationCell>& matrix,
                                      const LosoConfig& base, const std::string& dataset);

void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows);

}  // namespace hrdyn
