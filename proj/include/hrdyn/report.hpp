#pragma once

#include <json.hpp>

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hrdyn {

double mae(std::span<const double> preds, std::span<const double> labels);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

MeanStd aggregate(std::span<const double> per_session_maes);

// "m.mm±s.ss"
std::string format_mean_std(const MeanStd& m);

struct BlandAltman {
  std::vector<std::pair<double, double>> rows;  // (mean_bpm, diff_bpm)
  double bias = 0.0;
  double sd = 0.0;  // population std of the differences
  double lower = 0.0;
  double upper = 0.0;
};

BlandAltman bland_altman(std::span<const double> preds, std::span<const double> labels);

// (hr_t, hr_{t+delay}) for every t with a partner.
std::vector<std::pair<double, double>> phase_space(std::span<const double> hr, int delay_segments);

struct SessionScore {
  std::string session_id;
  double mae_bpm = 0.0;
  int n_segments = 0;

  bool operator==(const SessionScore&) const = default;
};

struct EvalReport {
  std::vector<SessionScore> per_session;
  double mae_mean = 0.0;
  double mae_std = 0.0;
  std::vector<std::pair<double, double>> bland_altman_rows;
  double pearson_r = 0.0;
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const EvalReport&) const = default;
};

// Fills mae_mean/mae_std from per_session.
void finalize(EvalReport& report);

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

void write_pairs_csv(std::ostream& os, const std::string& header,
                     const std::vector<std::pair<double, double>>& rows);

}  // namespace hrdyn
