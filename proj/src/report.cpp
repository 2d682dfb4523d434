#include "hrdyn/report.hpp"

#include "hrdyn/error.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace hrdyn {

double mae(std::span<const double> preds, std::span<const double> labels) {
  if (preds.size() != labels.size()) {
    throw InputError("mae: " + std::to_string(preds.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) throw InputError("mae of an empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - labels[i]);
  return s / static_cast<double>(preds.size());
}

MeanStd aggregate(std::span<const double> v) {
  if (v.empty()) throw InputError("aggregate needs at least one session");
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / n)};
}

std::string format_mean_std(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", m.mean, m.std);
  return buf;
}

BlandAltman bland_altman(std::span<const double> preds, std::span<const double> labels) {
  if (preds.size() != labels.size() || preds.empty()) {
    throw InputError("bland_altman needs equal, non-empty series");
  }
  BlandAltman ba;
  std::vector<double> diffs;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - labels[i];
    ba.rows.emplace_back((preds[i] + labels[i]) / 2.0, d);
    diffs.push_back(d);
  }
  const MeanStd ms = aggregate(diffs);
  ba.bias = ms.mean;
  ba.sd = ms.std;
  ba.lower = ba.bias - 1.96 * ba.sd;
  ba.upper = ba.bias + 1.96 * ba.sd;
  return ba;
}

std::vector<std::pair<double, double>> phase_space(std::span<const double> hr, int delay) {
  if (delay < 1) throw ConfigError("phase-space delay must be >= 1");
  std::vector<std::pair<double, double>> rows;
  const auto d = static_cast<std::size_t>(delay);
  for (std::size_t t = 0; t + d < hr.size(); ++t) rows.emplace_back(hr[t], hr[t + d]);
  return rows;
}

void finalize(EvalReport& report) {
  std::vector<double> maes;
  for (const auto& s : report.per_session) maes.push_back(s.mae_bpm);
  const MeanStd ms = aggregate(maes);
  report.mae_mean = ms.mean;
  report.mae_std = ms.std;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json sessions = nlohmann::json::array();
  for (const auto& s : r.per_session) {
    sessions.push_back({{"session_id", s.session_id}, {"mae_bpm", s.mae_bpm}, {"n_segments", s.n_segments}});
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [m, d] : r.bland_altman_rows) rows.push_back({m, d});
  return {{"per_session", sessions},
          {"mae_mean", r.mae_mean},
          {"mae_std", r.mae_std},
          {"mae_formatted", format_mean_std({r.mae_mean, r.mae_std})},
          {"bland_altman_rows", rows},
          {"pearson_r", r.pearson_r},
          {"metadata", r.metadata}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    for (const auto& s : j.at("per_session")) {
      r.per_session.push_back({s.at("session_id").get<std::string>(), s.at("mae_bpm").get<double>(),
                               s.at("n_segments").get<int>()});
    }
    r.mae_mean = j.at("mae_mean").get<double>();
    r.mae_std = j.at("mae_std").get<double>();
    for (const auto& row : j.at("bland_altman_rows")) {
      r.bland_altman_rows.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    }
    r.pearson_r = j.at("pearson_r").get<double>();
    r.metadata = j.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
  return r;
}

void write_pairs_csv(std::ostream& os, const std::string& header,
                     const std::vector<std::pair<double, double>>& rows) {
  os << header << '\n';
  const auto old = os.precision(17);
  for (const auto& [a, b] : rows) os << a << ',' << b << '\n';
  os.precision(old);
}

}  // namespace hrdyn
