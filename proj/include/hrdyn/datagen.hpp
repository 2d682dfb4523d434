#pragma once

#include "hrdyn/infodyn.hpp"
#include "hrdyn/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace hrdyn {

struct SynthConfig {
  double duration_s = 600.0;
  double fs_hz = 64.0;
  double window_s = 8.0;
  double hop_s = 2.0;
  double hr_mean_bpm = 85.0;
  double hr_std_bpm = 17.0;
  double artifact_rate = 0.0;  // bursts per minute
  double snr_db = 30.0;        // +inf disables white noise
  std::uint64_t seed = 0;

  // Trajectory shape. Activity levels switch after exponential dwell times;
  // the HR relaxes toward the current level with rate `relax_rate` per segment.
  double activity_dwell_s = 25.0;
  double relax_rate = 0.15;
  double walk_std_bpm = 1.0;     // per-segment innovation
  double oscillation_bpm = 4.0;  // slow sinusoidal component amplitude
  double oscillation_period_s = 300.0;
  // Stress knob: share of each activity change applied as an instantaneous
  // jump (0 = smooth transitions only).
  double abrupt_jump_fraction = 0.0;

  double harmonic_amplitude = 0.3;
  double wander_amplitude = 0.5;
  double wander_hz = 0.2;
  double artifact_gain = 3.0;  // burst RMS relative to the fundamental's RMS
};

// Throws ConfigError unless duration > 0, fs > 8 Hz and the window/hop
// convert to whole samples.
void validate(const SynthConfig& cfg);

// Segments a recording of cfg.duration_s produces.
std::size_t synth_segment_count(const SynthConfig& cfg);

// One HR value per segment, clipped to [40, 200] bpm.
HrSeries gen_hr_trajectory(const SynthConfig& cfg);

// Frequency-modulated pulse wave following `hr` (linearly interpolated
// between segment centres): fundamental + second harmonic + baseline wander
// + white noise at snr_db + band-limited motion-artifact bursts. Segments
// touched by a burst are listed in artifact_segments.
PpgSession synth_ppg(const HrSeries& hr, const SynthConfig& cfg, const std::string& subject_id);

// Session directory: meta.json, ppg.csv (t_s,ppg), labels.csv (segment_index,hr_bpm).
void save_session(const PpgSession& session, const std::filesystem::path& dir);
PpgSession load_session(const std::filesystem::path& dir);

// Every immediate subdirectory holding a meta.json, in name order.
std::vector<PpgSession> load_dataset(const std::filesystem::path& dir);

}  // namespace hrdyn
