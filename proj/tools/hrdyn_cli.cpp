#include "hrdyn/checkpoint.hpp"
#include "hrdyn/config_io.hpp"
#include "hrdyn/datagen.hpp"
#include "hrdyn/error.hpp"
#include "hrdyn/harness.hpp"
#include "hrdyn/infodyn.hpp"
#include "hrdyn/log.hpp"
#include "hrdyn/manifest.hpp"
#include "hrdyn/model.hpp"
#include "hrdyn/report.hpp"
#include "hrdyn/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hrdyn;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::string config_path;
  std::string out;
  bool overwrite = false;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

// Output directory and manifest of the running subcommand; the manifest is
// written on success and on failure once the directory exists.
struct Run {
  fs::path dir;
  bool dir_ready = false;
  RunManifest manifest;
};

Run g_run;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config " + path + " must hold a JSON object");
  // A run manifest doubles as a config: replay its resolved settings.
  if (j.contains("subcommand") && j.contains("config")) return j.at("config");
  return j;
}

json section(const json& cfg, const char* key) {
  return cfg.contains(key) ? cfg.at(key) : json::object();
}

void prepare_out(const Common& c, const std::string& subcommand) {
  fs::path dir = c.out;
  if (dir.empty()) {
    const char* root = std::getenv("HRDYN_OUT");
    dir = fs::path(root && *root ? root : "hrdyn_runs") / subcommand;
  }
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !c.overwrite) {
      throw ConfigError("output directory " + dir.string() + " is not empty (use --overwrite)");
    }
  }
  fs::create_directories(dir);
  g_run.dir = dir;
  g_run.dir_ready = true;
  g_run.manifest.subcommand = subcommand;
  g_run.manifest.jobs = c.jobs;
}

std::uint64_t resolve_seed(const Common& c, const json& cfg) {
  if (c.seed) return *c.seed;
  return cfg.value("seed", std::uint64_t{0});
}

template <typename T>
T parse_number(const std::string& s, const std::string& what) {
  T v{};
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("bad " + what + " value '" + s + "'");
  return v;
}

// "a:b" (step 1), "a:b:step" or "v1,v2,...".
template <typename T>
std::vector<T> parse_range(const std::string& spec, const std::string& what) {
  std::vector<T> out;
  if (spec.find(':') == std::string::npos) {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(item, what));
    if (out.empty()) throw ConfigError("empty " + what + " list");
    return out;
  }
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() < 2 || parts.size() > 3) throw ConfigError("bad " + what + " range '" + spec + "'");
  const T a = parse_number<T>(parts[0], what);
  const T b = parse_number<T>(parts[1], what);
  const T step = parts.size() == 3 ? parse_number<T>(parts[2], what) : T{1};
  if (!(step > T{0}) || b < a) throw ConfigError("bad " + what + " range '" + spec + "'");
  const auto count = static_cast<long long>((b - a) / step + 1e-9) + 1;
  for (long long i = 0; i < count; ++i) out.push_back(static_cast<T>(a + static_cast<T>(i) * step));
  return out;
}

HrSeries read_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open series " + path);
  return read_series_csv(in, path);
}

std::vector<PpgSession> read_dataset(const std::string& path) {
  if (fs::exists(fs::path(path) / "meta.json")) return {load_session(path)};
  std::vector<PpgSession> sessions = load_dataset(path);
  if (sessions.empty()) throw InputError("no sessions found under " + path);
  return sessions;
}

std::ofstream open_out(const std::string& name) {
  std::ofstream out(g_run.dir / name);
  if (!out) throw Error("cannot write " + (g_run.dir / name).string());
  return out;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON config (a run_manifest.json also works)");
  app->add_option("--out", c.out, "Output directory (default $HRDYN_OUT/<command>)");
  app->add_flag("--overwrite", c.overwrite, "Allow writing into a non-empty output directory");
  app->add_option("--jobs", c.jobs, "Worker threads for folds or grid cells")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "Root seed");
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  Common common;
  std::optional<int> subjects;
  std::optional<double> duration, fs, artifact_rate, snr_db, hr_mean, hr_std;
};

void cmd_synth(const SynthArgs& a) {
  const json file = load_config(a.common.config_path);
  SynthConfig cfg = synth_config_from_json(section(file, "synth"));
  if (a.duration) cfg.duration_s = *a.duration;
  if (a.fs) cfg.fs_hz = *a.fs;
  if (a.artifact_rate) cfg.artifact_rate = *a.artifact_rate;
  if (a.snr_db) cfg.snr_db = *a.snr_db;
  if (a.hr_mean) cfg.hr_mean_bpm = *a.hr_mean;
  if (a.hr_std) cfg.hr_std_bpm = *a.hr_std;
  const int subjects = a.subjects.value_or(file.value("subjects", 2));
  if (subjects < 1) throw ConfigError("--subjects must be >= 1");
  const std::uint64_t seed = resolve_seed(a.common, file);
  validate(cfg);

  prepare_out(a.common, "synth");
  json names = json::array();
  for (int i = 0; i < subjects; ++i) {
    SynthConfig sc = cfg;
    sc.seed = derive_seed(seed, "datagen:session", static_cast<std::uint64_t>(i));
    char id[16];
    std::snprintf(id, sizeof id, "S%02d", i + 1);
    const PpgSession s = synth_ppg(gen_hr_trajectory(sc), sc, id);
    save_session(s, g_run.dir / id);
    names.push_back(id);
  }
  json synth = to_json(cfg);
  synth.erase("seed");
  if (!std::isfinite(cfg.snr_db)) synth["snr_db"] = nullptr;
  g_run.manifest.seed = seed;
  g_run.manifest.config = {{"seed", seed}, {"subjects", subjects}, {"synth", synth}};
  g_run.manifest.outputs = {{"sessions", names}};
  std::cout << "wrote " << subjects << " sessions to " << g_run.dir.string() << '\n';
}

// ---- analyze-mi / analyze-pcc -------------------------------------------------

struct SweepArgs {
  Common common;
  std::string series;
  std::optional<std::string> n_range, sigma_range, estimator;
  std::optional<int> bins, k;
  bool include_current = false;
};

void cmd_sweep(const SweepArgs& a, bool pcc) {
  const char* name = pcc ? "analyze-pcc" : "analyze-mi";
  const json file = load_config(a.common.config_path);
  SweepOptions opts = sweep_options_from_json(section(file, "sweep"));
  if (a.estimator) opts.estimator = mi_estimator_from_string(*a.estimator);
  if (a.bins) opts.bins = *a.bins;
  if (a.k) opts.k = *a.k;
  if (a.include_current) opts.include_current = true;
  const std::string n_spec = a.n_range.value_or(file.value("n", std::string("1:10")));
  const std::string s_spec = a.sigma_range.value_or(file.value("sigma", std::string("0:10")));
  const std::vector<int> ns = parse_range<int>(n_spec, "n");
  const std::vector<double> sigmas = parse_range<double>(s_spec, "sigma");
  const std::string series_path = a.series.empty() ? file.value("series", std::string()) : a.series;
  if (series_path.empty()) throw ConfigError("--series is required");
  const std::uint64_t seed = resolve_seed(a.common, file);
  const HrSeries y = read_series(series_path);

  prepare_out(a.common, name);
  add_input(g_run.manifest, "series", series_path);
  const MiGrid grid = pcc ? pcc_sweep(y, ns, sigmas, seed, opts.include_current)
                          : mi_noise_sweep(y, ns, sigmas, seed, opts, a.common.jobs);
  const std::string file_name = pcc ? "pcc_grid.csv" : "mi_grid.csv";
  auto out = open_out(file_name);
  write_grid_csv(out, grid);

  g_run.manifest.seed = seed;
  g_run.manifest.config = {{"seed", seed}, {"n", n_spec}, {"sigma", s_spec},
                           {"series", series_path}, {"sweep", to_json(opts)}};
  g_run.manifest.outputs = {{"grid", file_name}, {"rows", grid.cells.size()}};
  std::cout << "wrote " << grid.cells.size() << " cells to " << (g_run.dir / file_name).string() << '\n';
}

// ---- transfer-entropy -------------------------------------------------------

struct TeArgs {
  Common common;
  std::string src, dst;
  std::optional<int> lag, bins, source_lag;
};

void cmd_te(const TeArgs& a) {
  const json file = load_config(a.common.config_path);
  const json te = section(file, "transfer_entropy");
  TransferEntropyConfig cfg;
  cfg.lag = a.lag.value_or(te.value("lag", cfg.lag));
  cfg.bins = a.bins.value_or(te.value("bins", cfg.bins));
  cfg.source_lag = a.source_lag.value_or(te.value("source_lag", cfg.source_lag));
  const std::string src = a.src.empty() ? file.value("src", std::string()) : a.src;
  const std::string dst = a.dst.empty() ? file.value("dst", std::string()) : a.dst;
  if (src.empty() || dst.empty()) throw ConfigError("--src and --dst are required");
  const HrSeries x = read_series(src);
  const HrSeries y = read_series(dst);

  prepare_out(a.common, "transfer-entropy");
  add_input(g_run.manifest, "src", src);
  add_input(g_run.manifest, "dst", dst);
  const TransferEntropyResult r = transfer_entropy(x.values, y.values, cfg);
  if (r.sparse_bins) {
    std::cerr << "warning: sparse joint histogram (mean occupancy " << r.mean_occupancy
              << " < 5); estimate is biased upward\n";
  }
  const json result = {{"nats", r.nats}, {"sparse_bins", r.sparse_bins},
                       {"mean_occupancy", r.mean_occupancy}};
  open_out("transfer_entropy.json") << result.dump(2) << '\n';
  g_run.manifest.config = {{"src", src}, {"dst", dst},
                           {"transfer_entropy",
                            {{"lag", cfg.lag}, {"bins", cfg.bins}, {"source_lag", cfg.source_lag}}}};
  g_run.manifest.outputs = result;
  std::cout << r.nats << '\n';
}

// ---- train / eval / ablate --------------------------------------------------

struct ModelArgs {
  std::optional<std::string> preset, conditioning, xi_train_source;
  std::optional<int> k, epochs, batch_size, inner_folds, bootstrap;
  std::optional<double> lr;
  std::optional<bool> augment;
};

void add_model_args(CLI::App* app, ModelArgs& m) {
  app->add_option("--preset", m.preset, "Model preset: desk or paper-scale");
  app->add_option("--conditioning", m.conditioning, "encoder_decoder, mlp_concat or none");
  app->add_option("--k", m.k, "HR history length K");
  app->add_option("--epochs", m.epochs, "Epoch cap");
  app->add_option("--lr", m.lr, "Initial learning rate");
  app->add_option("--batch-size", m.batch_size, "Mini-batch size");
  app->add_option("--inner-folds", m.inner_folds, "Inner CV splits actually trained (1-3)");
  app->add_option("--bootstrap", m.bootstrap, "Spectral bootstrap segments (default K)");
  app->add_option("--xi-train-source", m.xi_train_source, "labels or predictions");
  app->add_flag("--augment,!--no-augment", m.augment, "Gaussian xi augmentation");
}

LosoConfig resolve_loso(const json& file, const ModelArgs& m, const Common& c) {
  LosoConfig cfg;
  json model = section(file, "model");
  if (m.preset) model["preset"] = *m.preset;
  cfg.model = model_config_from_json(model);
  cfg.train = train_config_from_json(section(file, "train"));
  cfg.segmentation = segmentation_config_from_json(section(file, "segmentation"));
  cfg.spectral = spectral_config_from_json(section(file, "spectral"));
  cfg.bootstrap_segments = file.value("bootstrap_segments", -1);
  if (m.conditioning) cfg.model.conditioning = conditioning_from_string(*m.conditioning);
  if (m.k) cfg.model.k_history = *m.k;
  if (cfg.model.conditioning == Conditioning::none && !m.k && !model.contains("k_history")) {
    cfg.model.k_history = 0;
  }
  cfg.train.k_history = cfg.model.k_history;
  if (m.epochs) cfg.train.max_epochs = *m.epochs;
  if (m.lr) cfg.train.lr = *m.lr;
  if (m.batch_size) cfg.train.batch_size = *m.batch_size;
  if (m.inner_folds) cfg.train.inner_folds = *m.inner_folds;
  if (m.augment) cfg.train.augment = *m.augment;
  if (m.xi_train_source) cfg.train.xi_train_source = xi_source_from_string(*m.xi_train_source);
  if (m.bootstrap) cfg.bootstrap_segments = *m.bootstrap;
  cfg.train.seed = resolve_seed(c, file);
  cfg.jobs = c.jobs;
  validate(cfg.model);
  validate(cfg.train);
  return cfg;
}

json loso_json(const LosoConfig& cfg) {
  json model = to_json(cfg.model);
  return {{"seed", cfg.train.seed},
          {"model", model},
          {"train", to_json(cfg.train)},
          {"segmentation", to_json(cfg.segmentation)},
          {"spectral", to_json(cfg.spectral)},
          {"bootstrap_segments", cfg.bootstrap_segments}};
}

void write_eval_outputs(const LosoResult& r) {
  open_out("report.json") << to_json(r.report).dump(2) << '\n';
  auto ba = open_out("bland_altman.csv");
  write_pairs_csv(ba, "mean_bpm,diff_bpm", r.report.bland_altman_rows);
  auto pred = open_out("predictions.csv");
  pred << "session,segment,pred_bpm,label_bpm\n";
  std::vector<std::pair<double, double>> phase;
  for (const FoldOutcome& f : r.folds) {
    for (std::size_t i = 0; i < f.predictions.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g", i, f.predictions[i], f.labels[i]);
      pred << f.test_session << ',' << buf << '\n';
    }
    // 2-segment delay = 4 s at the default 2 s hop.
    const auto rows = phase_space(f.predictions, 2);
    phase.insert(phase.end(), rows.begin(), rows.end());
  }
  auto ps = open_out("phase_space.csv");
  write_pairs_csv(ps, "hr_t,hr_t_plus_delay", phase);
}

json fold_summary(const LosoResult& r) {
  json folds = json::array();
  for (const FoldOutcome& f : r.folds) {
    folds.push_back({{"session", f.test_session},
                     {"mae_bpm", f.mae_bpm},
                     {"train_pairs", f.train_pairs},
                     {"val_pairs", f.val_pairs},
                     {"best_epoch", f.best_epoch},
                     {"epochs_run", f.epochs_run},
                     {"leakage_free", f.leakage_free},
                     {"label_reads_during_prediction", f.label_reads_during_prediction}});
  }
  return folds;
}

struct TrainArgs {
  Common common;
  ModelArgs model;
  std::string data;
  bool loso = false;
};

void cmd_train(const TrainArgs& a) {
  const json file = load_config(a.common.config_path);
  const LosoConfig cfg = resolve_loso(file, a.model, a.common);
  const std::string data = a.data.empty() ? file.value("data", std::string()) : a.data;
  if (data.empty()) throw ConfigError("--data is required");
  const std::vector<PpgSession> sessions = read_dataset(data);

  prepare_out(a.common, "train");
  add_input(g_run.manifest, "data", data);
  g_run.manifest.seed = cfg.train.seed;
  g_run.manifest.config = loso_json(cfg);
  g_run.manifest.config["data"] = data;
  g_run.manifest.config["loso"] = a.loso;

  SelectedModel sel = train_with_inner_cv(sessions, cfg);
  save_checkpoint(g_run.dir / "model.ckpt.json", sel.result.model);
  auto hist = open_out("history.csv");
  hist << "epoch,train_mae,val_mae,lr\n";
  for (const EpochRecord& e : sel.result.history) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g", e.epoch, e.train_mae, e.val_mae, e.lr);
    hist << buf << '\n';
  }
  json outputs = {{"checkpoint", "model.ckpt.json"},
                  {"format_version", kCheckpointFormatVersion},
                  {"best_epoch", sel.result.best_epoch},
                  {"best_val_mae", sel.result.best_val_mae},
                  {"epochs_run", sel.result.history.size()},
                  {"aborted", sel.result.aborted}};
  if (sel.result.aborted) outputs["diagnostic"] = sel.result.diagnostic;
  std::cout << "best validation MAE " << sel.result.best_val_mae << " bpm at epoch "
            << sel.result.best_epoch << '\n';

  if (a.loso) {
    const LosoResult r = run_loso(sessions, cfg);
    write_eval_outputs(r);
    outputs["loso"] = {{"mae_mean", r.report.mae_mean}, {"mae_std", r.report.mae_std},
                       {"folds", fold_summary(r)}};
    std::cout << "LOSO MAE " << format_mean_std({r.report.mae_mean, r.report.mae_std}) << " bpm\n";
  }
  g_run.manifest.outputs = outputs;
}

struct EvalArgs {
  Common common;
  std::string checkpoint, data;
  std::optional<int> bootstrap;
};

void cmd_eval(const EvalArgs& a) {
  const json file = load_config(a.common.config_path);
  const std::string ckpt = a.checkpoint.empty() ? file.value("checkpoint", std::string()) : a.checkpoint;
  const std::string data = a.data.empty() ? file.value("data", std::string()) : a.data;
  if (ckpt.empty() || data.empty()) throw ConfigError("--checkpoint and --data are required");
  Checkpoint cp = load_checkpoint(ckpt);
  LosoConfig cfg;
  cfg.model = cp.model.config();
  cfg.segmentation = segmentation_config_from_json(section(file, "segmentation"));
  cfg.spectral = spectral_config_from_json(section(file, "spectral"));
  cfg.bootstrap_segments = a.bootstrap.value_or(file.value("bootstrap_segments", -1));
  cfg.jobs = a.common.jobs;
  const std::vector<PpgSession> sessions = read_dataset(data);

  prepare_out(a.common, "eval");
  add_input(g_run.manifest, "checkpoint", ckpt);
  add_input(g_run.manifest, "data", data);
  const LosoResult r = evaluate_sessions(cp.model, sessions, cfg);
  write_eval_outputs(r);
  g_run.manifest.config = {{"checkpoint", ckpt},
                           {"data", data},
                           {"segmentation", to_json(cfg.segmentation)},
                           {"spectral", to_json(cfg.spectral)},
                           {"bootstrap_segments", cfg.bootstrap_segments}};
  g_run.manifest.outputs = {{"mae_mean", r.report.mae_mean}, {"mae_std", r.report.mae_std},
                            {"pearson_r", r.report.pearson_r}, {"report", "report.json"}};
  std::cout << "MAE " << format_mean_std({r.report.mae_mean, r.report.mae_std}) << " bpm\n";
}

struct AblateArgs {
  Common common;
  ModelArgs model;
  std::string data;
  std::string matrix = "default";
  std::string conditionings = "none,encoder_decoder,mlp_concat";
  std::string ks = "3,5,7";
  std::string aug = "off,on";
  std::string dataset_name;
};

void cmd_ablate(const AblateArgs& a) {
  const json file = load_config(a.common.config_path);
  const LosoConfig base = resolve_loso(file, a.model, a.common);
  const std::string data = a.data.empty() ? file.value("data", std::string()) : a.data;
  if (data.empty()) throw ConfigError("--data is required");

  std::vector<AblationCell> matrix;
  if (a.matrix == "default") {
    matrix = default_ablation_matrix();
  } else if (a.matrix == "grid") {
    std::vector<Conditioning> conds;
    std::stringstream cs(a.conditionings);
    for (std::string item; std::getline(cs, item, ',');) conds.push_back(conditioning_from_string(item));
    std::vector<bool> augs;
    std::stringstream as(a.aug);
    for (std::string item; std::getline(as, item, ',');) {
      if (item != "on" && item != "off") throw ConfigError("--aug values must be on or off");
      augs.push_back(item == "on");
    }
    matrix = ablation_grid(conds, augs, parse_range<int>(a.ks, "k"));
  } else {
    throw ConfigError("--matrix must be default or grid");
  }
  const std::vector<PpgSession> sessions = read_dataset(data);
  const std::string dataset = a.dataset_name.empty() ? fs::path(data).filename().string() : a.dataset_name;

  prepare_out(a.common, "ablate");
  add_input(g_run.manifest, "data", data);
  const std::vector<AblationRow> rows = run_ablation(sessions, matrix, base, dataset);
  auto out = open_out("ablation.csv");
  write_ablation_csv(out, rows);

  json cells = json::array();
  for (const AblationCell& c : matrix) {
    cells.push_back({{"conditioning", to_string(c.conditioning)}, {"k", c.k}, {"augment", c.augment}});
  }
  g_run.manifest.seed = base.train.seed;
  g_run.manifest.config = loso_json(base);
  g_run.manifest.config["data"] = data;
  g_run.manifest.config["matrix"] = cells;
  json results = json::array();
  for (const AblationRow& r : rows) {
    results.push_back({{"variant", r.variant}, {"k", r.k}, {"aug", r.augment},
                       {"mae_mean", r.mae_mean}, {"mae_std", r.mae_std}});
    std::cout << r.variant << " k=" << r.k << (r.augment ? " aug " : " no-aug ")
              << format_mean_std({r.mae_mean, r.mae_std}) << '\n';
  }
  g_run.manifest.outputs = {{"csv", "ablation.csv"}, {"rows", results}};
}

// ---- gradcheck / hr-fft -----------------------------------------------------

struct GradArgs {
  Common common;
  std::optional<std::string> preset, conditioning;
  std::size_t coords = 20;
  int batch = 3;
  int length = 256;
  double tol = 1e-4;
};

int cmd_gradcheck(const GradArgs& a) {
  const json file = load_config(a.common.config_path);
  json model = section(file, "model");
  if (a.preset) model["preset"] = *a.preset;
  ModelConfig cfg = model_config_from_json(model);
  if (a.conditioning) cfg.conditioning = conditioning_from_string(*a.conditioning);
  validate(cfg);
  const std::uint64_t seed = resolve_seed(a.common, file);

  prepare_out(a.common, "gradcheck");
  nn::GradCheckOptions opts;
  opts.coords_per_tensor = a.coords;
  opts.seed = seed;
  const nn::GradCheckResult r = check_model_gradients(cfg, seed, a.batch, a.length, opts);
  g_run.manifest.seed = seed;
  g_run.manifest.config = {{"seed", seed}, {"model", to_json(cfg)}, {"coords", a.coords},
                           {"batch", a.batch}, {"length", a.length}, {"tol", a.tol}};
  g_run.manifest.outputs = {{"max_rel_error", r.max_rel_error}, {"worst", r.worst},
                            {"checked", r.checked}};
  std::cout << "max relative error " << r.max_rel_error << " (" << r.worst << ", " << r.checked
            << " coordinates)\n";
  return r.max_rel_error < a.tol ? 0 : 2;
}

struct FftArgs {
  Common common;
  std::string data;
};

void cmd_hr_fft(const FftArgs& a) {
  const json file = load_config(a.common.config_path);
  const SegmentationConfig seg = segmentation_config_from_json(section(file, "segmentation"));
  const SpectralConfig spec = spectral_config_from_json(section(file, "spectral"));
  const std::string data = a.data.empty() ? file.value("data", std::string()) : a.data;
  if (data.empty()) throw ConfigError("--data is required");
  const std::vector<PpgSession> sessions = read_dataset(data);

  prepare_out(a.common, "hr-fft");
  add_input(g_run.manifest, "data", data);
  auto out = open_out("hr_fft.csv");
  out << "session,segment,hr_fft_bpm,label_bpm\n";
  json per_session = json::array();
  std::vector<double> maes;
  for (const PpgSession& s : sessions) {
    const std::vector<double> est = spectral_track(s.samples, s.fs_hz, seg, spec);
    for (std::size_t i = 0; i < est.size(); ++i) {
      char buf[96];
      const double label = i < s.labels.size() ? s.labels[i] : std::nan("");
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g", i, est[i], label);
      out << s.subject_id << ',' << buf << '\n';
    }
    if (s.labels.size() == est.size()) {
      maes.push_back(mae(est, s.labels));
      per_session.push_back({{"session", s.subject_id}, {"mae_bpm", maes.back()}});
    }
  }
  g_run.manifest.config = {{"data", data}, {"segmentation", to_json(seg)}, {"spectral", to_json(spec)}};
  g_run.manifest.outputs = {{"csv", "hr_fft.csv"}, {"per_session", per_session}};
  if (!maes.empty()) {
    const MeanStd m = aggregate(maes);
    g_run.manifest.outputs["mae_mean"] = m.mean;
    g_run.manifest.outputs["mae_std"] = m.std;
    std::cout << "spectral MAE " << format_mean_std(m) << " bpm\n";
  }
}

void finish_manifest(const std::string& error = {}) {
  if (!g_run.dir_ready) return;
  if (!error.empty()) g_run.manifest.outputs["error"] = error;
  try {
    write_manifest(g_run.dir, g_run.manifest);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heart-rate estimation from PPG conditioned on HR history"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("hrdyn ") + kVersion + " (checkpoint format_version " +
                                        std::to_string(kCheckpointFormatVersion) + ")");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic PPG sessions");
  add_common(s, synth.common);
  s->add_option("--subjects", synth.subjects, "Number of sessions");
  s->add_option("--duration", synth.duration, "Session length in seconds");
  s->add_option("--fs", synth.fs, "Sampling rate (Hz)");
  s->add_option("--artifact-rate", synth.artifact_rate, "Motion-artifact bursts per minute");
  s->add_option("--snr-db", synth.snr_db, "White-noise SNR (dB)");
  s->add_option("--hr-mean", synth.hr_mean, "Mean HR (bpm)");
  s->add_option("--hr-std", synth.hr_std, "HR standard deviation (bpm)");

  SweepArgs mi, pcc;
  auto* m = app.add_subcommand("analyze-mi", "MI between HR and its noisy lags over an (N, sigma) grid");
  auto* p = app.add_subcommand("analyze-pcc", "Summed Pearson correlation over an (N, sigma) grid");
  for (auto [cmd, args] : {std::pair{m, &mi}, std::pair{p, &pcc}}) {
    add_common(cmd, args->common);
    cmd->add_option("--series", args->series, "CSV with header hr_bpm");
    cmd->add_option("--n", args->n_range, "History lengths, e.g. 1:10");
    cmd->add_option("--sigma", args->sigma_range, "Noise levels in bpm, e.g. 0:10 or 0:10:0.5");
    cmd->add_flag("--include-current", args->include_current, "Add noisy y_t to the lag vector");
  }
  m->add_option("--estimator", mi.estimator, "ksg or hist");
  m->add_option("--bins", mi.bins, "Histogram bins per dimension");
  m->add_option("--k", mi.k, "KSG neighbours");

  TeArgs te;
  auto* t = app.add_subcommand("transfer-entropy", "Binned transfer entropy src -> dst");
  add_common(t, te.common);
  t->add_option("--src", te.src, "Source series CSV");
  t->add_option("--dst", te.dst, "Destination series CSV");
  t->add_option("--lag", te.lag, "Destination history length L");
  t->add_option("--bins", te.bins, "Bins per variable");
  t->add_option("--source-lag", te.source_lag, "Source delay in samples");

  TrainArgs tr;
  auto* trc = app.add_subcommand("train", "Train a model with inner cross-validation");
  add_common(trc, tr.common);
  add_model_args(trc, tr.model);
  trc->add_option("--data", tr.data, "Dataset directory");
  trc->add_flag("--loso", tr.loso, "Also run leave-one-session-out evaluation");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Autoregressive evaluation of a checkpoint");
  add_common(e, ev.common);
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint JSON");
  e->add_option("--data", ev.data, "Dataset or session directory");
  e->add_option("--bootstrap", ev.bootstrap, "Spectral bootstrap segments (default K)");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "LOSO ablation over model variants");
  add_common(a, ab.common);
  add_model_args(a, ab.model);
  a->add_option("--data", ab.data, "Dataset directory");
  a->add_option("--matrix", ab.matrix, "default or grid");
  a->add_option("--conditionings", ab.conditionings, "Grid axis, comma separated");
  a->add_option("--ks", ab.ks, "Grid axis, e.g. 3,5,7 or 3:7:2");
  a->add_option("--aug", ab.aug, "Grid axis: off,on");
  a->add_option("--dataset-name", ab.dataset_name, "Dataset column in the CSV");

  GradArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of the model gradients");
  add_common(g, gc.common);
  g->add_option("--preset", gc.preset, "Model preset");
  g->add_option("--conditioning", gc.conditioning, "encoder_decoder, mlp_concat or none");
  g->add_option("--coords", gc.coords, "Coordinates per tensor (0 = all)");
  g->add_option("--batch", gc.batch, "Batch size")->check(CLI::PositiveNumber);
  g->add_option("--length", gc.length, "Input length in samples")->check(CLI::PositiveNumber);
  g->add_option("--tol", gc.tol, "Maximum accepted relative error");

  FftArgs ff;
  auto* f = app.add_subcommand("hr-fft", "Spectral HR estimate for every segment");
  add_common(f, ff.common);
  f->add_option("--data", ff.data, "Dataset or session directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  int rc = 0;
  try {
    if (s->parsed()) cmd_synth(synth);
    if (m->parsed()) cmd_sweep(mi, false);
    if (p->parsed()) cmd_sweep(pcc, true);
    if (t->parsed()) cmd_te(te);
    if (trc->parsed()) cmd_train(tr);
    if (e->parsed()) cmd_eval(ev);
    if (a->parsed()) cmd_ablate(ab);
    if (g->parsed()) rc = cmd_gradcheck(gc);
    if (f->parsed()) cmd_hr_fft(ff);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << '\n';
    finish_manifest(err.what());
    return 1;
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    finish_manifest(err.what());
    return 1;
  } catch (const ParseError& err) {
    std::cerr << "error: " << err.what() << '\n';
    finish_manifest(err.what());
    return 1;
  } catch (const EstimatorChoiceError& err) {
    std::cerr << "error: " << err.what() << '\n';
    finish_manifest(err.what());
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    finish_manifest(err.what());
    return 2;
  }
  finish_manifest();
  return rc;
}
