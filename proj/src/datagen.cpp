#include "hrdyn/datagen.hpp"

#include "hrdyn/error.hpp"
#include "hrdyn/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace hrdyn {

namespace fs = std::filesystem;

namespace {

// Activity level spread relative to hr_std_bpm; calibrated so the long-run
// sample std of a default trajectory matches hr_std_bpm.
constexpr double kLevelSpread = 20.8 / 17.0;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view tok, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError(where + ": not a finite number: '" + std::string(tok) + "'");
  }
  return v;
}

long long parse_int(std::string_view tok, const std::string& where) {
  long long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError(where + ": not an integer: '" + std::string(tok) + "'");
  }
  return v;
}

struct CsvReader {
  std::ifstream in;
  std::string path;
  int lineno = 0;

  explicit CsvReader(const fs::path& p) : in(p), path(p.string()) {
    if (!in) throw ParseError(path + ": missing or unreadable file");
  }

  void expect_header(std::string_view header) {
    std::string line;
    if (!next(line)) throw ParseError(path + ": empty file");
    if (line != header) {
      throw ParseError(path + ":1: expected header `" + std::string(header) + "`, got `" + line + "`");
    }
  }

  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  std::pair<std::string_view, std::string_view> split2(const std::string& line) const {
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError(where() + ": expected two comma-separated fields");
    }
    std::string_view v(line);
    return {v.substr(0, comma), v.substr(comma + 1)};
  }

  std::string where() const { return path + ":" + std::to_string(lineno); }
};

}  // namespace

void validate(const SynthConfig& cfg) {
  if (!(cfg.duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  if (!(cfg.fs_hz > 8.0)) throw ConfigError("fs_hz must exceed 8 Hz");
  samples_for(cfg.window_s, cfg.fs_hz, "window");
  samples_for(cfg.hop_s, cfg.fs_hz, "hop");
  if (!(cfg.hr_std_bpm >= 0.0)) throw ConfigError("hr_std_bpm must be >= 0");
  if (!(cfg.artifact_rate >= 0.0)) throw ConfigError("artifact_rate must be >= 0");
  if (cfg.abrupt_jump_fraction < 0.0 || cfg.abrupt_jump_fraction > 1.0) {
    throw ConfigError("abrupt_jump_fraction must lie in [0, 1]");
  }
}

std::size_t synth_segment_count(const SynthConfig& cfg) {
  validate(cfg);
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.fs_hz));
  return segment_count(n, samples_for(cfg.window_s, cfg.fs_hz, "window"),
                       samples_for(cfg.hop_s, cfg.fs_hz, "hop"));
}

HrSeries gen_hr_trajectory(const SynthConfig& cfg) {
  const std::size_t n = synth_segment_count(cfg);
  Rng rng(derive_seed(cfg.seed, "datagen:trajectory"));
  const double level_std = kLevelSpread * cfg.hr_std_bpm;
  const double switch_prob = 1.0 - std::exp(-cfg.hop_s / cfg.activity_dwell_s);
  double target = cfg.hr_mean_bpm + level_std * standard_normal(rng);
  double base = target;
  const double phase = 2.0 * std::numbers::pi * uniform01(rng);

  HrSeries out;
  out.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (uniform01(rng) < switch_prob) {
      target = cfg.hr_mean_bpm + level_std * standard_normal(rng);
      base += cfg.abrupt_jump_fraction * (target - base);
    }
    base += cfg.relax_rate * (target - base) + cfg.walk_std_bpm * standard_normal(rng);
    const double t = static_cast<double>(i) * cfg.hop_s;
    const double osc =
        cfg.oscillation_bpm * std::sin(2.0 * std::numbers::pi * t / cfg.oscillation_period_s + phase);
    out.values.push_back(std::clamp(base + osc, 40.0, 200.0));
  }
  return out;
}

PpgSession synth_ppg(const HrSeries& hr, const SynthConfig& cfg, const std::string& subject_id) {
  validate(cfg);
  if (hr.values.empty()) throw InputError("synth_ppg needs a non-empty HR series");
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.fs_hz));
  const std::size_t win = samples_for(cfg.window_s, cfg.fs_hz, "window");
  const std::size_t hop = samples_for(cfg.hop_s, cfg.fs_hz, "hop");
  const std::size_t n_seg = segment_count(n, win, hop);
  if (hr.values.size() != n_seg) {
    throw InputError("HR series has " + std::to_string(hr.values.size()) +
                     " values but the recording yields " + std::to_string(n_seg) + " segments");
  }
  Rng rng(derive_seed(cfg.seed, "datagen:ppg"));
  const double dt = 1.0 / cfg.fs_hz;
  const double two_pi = 2.0 * std::numbers::pi;

  // Instantaneous HR: linear between segment centres, held at the ends.
  auto hr_at = [&](double t) {
    const double pos = (t - cfg.window_s / 2.0) / cfg.hop_s;
    if (pos <= 0.0) return hr.values.front();
    const auto last = static_cast<double>(hr.values.size() - 1);
    if (pos >= last) return hr.values.back();
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return hr.values[i] * (1.0 - f) + hr.values[i + 1] * f;
  };

  const double harmonic_phase = two_pi * uniform01(rng);
  const double wander_phase = two_pi * uniform01(rng);
  const double signal_power = 0.5 * (1.0 + cfg.harmonic_amplitude * cfg.harmonic_amplitude);
  const double noise_std =
      std::isfinite(cfg.snr_db) ? std::sqrt(signal_power / std::pow(10.0, cfg.snr_db / 10.0)) : 0.0;

  PpgSession s;
  s.subject_id = subject_id;
  s.fs_hz = cfg.fs_hz;
  s.window_s = cfg.window_s;
  s.hop_s = cfg.hop_s;
  s.labels = hr.values;
  s.samples.resize(n);
  double phase = two_pi * uniform01(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    s.samples[i] = std::sin(phase) + cfg.harmonic_amplitude * std::sin(2.0 * phase + harmonic_phase) +
                   cfg.wander_amplitude * std::sin(two_pi * cfg.wander_hz * t + wander_phase);
    // Trapezoidal phase integration keeps the waveform phase-continuous.
    phase += two_pi * 0.5 * (hr_at(t) + hr_at(t + dt)) / 60.0 * dt;
  }
  if (noise_std > 0.0) {
    for (double& v : s.samples) v += noise_std * standard_normal(rng);
  }

  if (cfg.artifact_rate > 0.0) {
    Rng art = make_rng(cfg.seed, "datagen:artifacts");
    const double mean_gap_s = 60.0 / cfg.artifact_rate;
    const double total_s = static_cast<double>(n) * dt;
    std::vector<char> flagged(n_seg, 0);
    double start = -mean_gap_s * std::log(1.0 - uniform01(art));
    while (start < total_s) {
      const double dur = 2.0 + 4.0 * uniform01(art);
      double comp_f[3], comp_p[3];
      for (int c = 0; c < 3; ++c) {
        comp_f[c] = 0.5 + 3.5 * uniform01(art);
        comp_p[c] = two_pi * uniform01(art);
      }
      // Three unit-RMS-matched sinusoids: total RMS = gain / sqrt(2).
      const double amp = cfg.artifact_gain / std::sqrt(2.0) / std::sqrt(1.5);
      const auto i0 = static_cast<std::size_t>(std::ceil(start * cfg.fs_hz));
      const auto i1 = std::min(n, static_cast<std::size_t>(std::ceil((start + dur) * cfg.fs_hz)));
      for (std::size_t i = i0; i < i1; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double taper = 0.5 - 0.5 * std::cos(two_pi * (t - start) / dur);
        double v = 0.0;
        for (int c = 0; c < 3; ++c) v += std::sin(two_pi * comp_f[c] * t + comp_p[c]);
        s.samples[i] += amp * taper * v;
      }
      if (i1 > i0) {
        for (std::size_t g = 0; g < n_seg; ++g) {
          const std::size_t a = g * hop, b = g * hop + win;
          if (a < i1 && i0 < b) flagged[g] = 1;
        }
      }
      start += dur - mean_gap_s * std::log(1.0 - uniform01(art));
    }
    for (std::size_t g = 0; g < n_seg; ++g) {
      if (flagged[g]) s.artifact_segments.push_back(static_cast<int>(g));
    }
  }
  return s;
}

void save_session(const PpgSession& session, const fs::path& dir) {
  validate_session(session);
  fs::create_directories(dir);
  {
    nlohmann::json meta{{"subject", session.subject_id},
                        {"fs_hz", session.fs_hz},
                        {"window_s", session.window_s},
                        {"hop_s", session.hop_s}};
    if (!session.artifact_segments.empty()) meta["artifact_segments"] = session.artifact_segments;
    std::ofstream os(dir / "meta.json");
    if (!os) throw InputError("cannot write " + (dir / "meta.json").string());
    os << meta.dump(2) << '\n';
  }
  {
    std::ofstream os(dir / "ppg.csv");
    if (!os) throw InputError("cannot write " + (dir / "ppg.csv").string());
    std::string buf = "t_s,ppg\n";
    for (std::size_t i = 0; i < session.samples.size(); ++i) {
      buf += fmt17(static_cast<double>(i) / session.fs_hz);
      buf += ',';
      buf += fmt17(session.samples[i]);
      buf += '\n';
    }
    os << buf;
  }
  {
    std::ofstream os(dir / "labels.csv");
    if (!os) throw InputError("cannot write " + (dir / "labels.csv").string());
    os << "segment_index,hr_bpm\n";
    for (std::size_t i = 0; i < session.labels.size(); ++i) {
      os << i << ',' << fmt17(session.labels[i]) << '\n';
    }
  }
}

PpgSession load_session(const fs::path& dir) {
  PpgSession s;
  {
    const fs::path p = dir / "meta.json";
    std::ifstream is(p);
    if (!is) throw ParseError(p.string() + ": missing or unreadable file");
    nlohmann::json meta;
    try {
      is >> meta;
      s.subject_id = meta.at("subject").get<std::string>();
      s.fs_hz = meta.at("fs_hz").get<double>();
      s.window_s = meta.value("window_s", 8.0);
      s.hop_s = meta.value("hop_s", 2.0);
      s.artifact_segments = meta.value("artifact_segments", std::vector<int>{});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
    if (!(s.fs_hz > 0.0)) throw ConfigError(p.string() + ": fs_hz must be positive");
  }
  {
    CsvReader r(dir / "ppg.csv");
    r.expect_header("t_s,ppg");
    std::string line;
    double prev_t = -INFINITY;
    while (r.next(line)) {
      const auto [t_tok, v_tok] = r.split2(line);
      const double t = parse_double(t_tok, r.where());
      if (!(t > prev_t)) throw ParseError(r.where() + ": t_s is not strictly increasing");
      prev_t = t;
      s.samples.push_back(parse_double(v_tok, r.where()));
    }
  }
  {
    CsvReader r(dir / "labels.csv");
    r.expect_header("segment_index,hr_bpm");
    std::string line;
    long long expected = 0;
    while (r.next(line)) {
      const auto [i_tok, v_tok] = r.split2(line);
      const long long idx = parse_int(i_tok, r.where());
      if (idx != expected) {
        throw ParseError(r.where() + ": expected segment_index " + std::to_string(expected) +
                         ", got " + std::to_string(idx));
      }
      ++expected;
      s.labels.push_back(parse_double(v_tok, r.where()));
    }
  }
  validate_session(s);
  return s;
}

std::vector<PpgSession> load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<PpgSession> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(load_session(d));
  return out;
}

}  // namespace hrdyn
