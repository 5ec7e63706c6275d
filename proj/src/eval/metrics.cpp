// SPDX-License-Identifier: Apache-2.0
#include "mavae/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "mavae/errors.hpp"

namespace mavae::eval {

ConfusionCounts confusion(std::span<const detect::DetectionReport> reports,
                          std::span<const TruthLabel> truth) {
  if (reports.size() != truth.size()) {
    throw ContractError("confusion: " + std::to_string(reports.size()) + " reports for " +
                        std::to_string(truth.size()) + " labels");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].id != truth[i].id) {
      throw ContractError("confusion: report '" + reports[i].id + "' does not match label '" +
                          truth[i].id + "'");
    }
    const bool predicted = reports[i].peak > reports[i].threshold;
    if (truth[i].anomalous) (predicted ? c.tp : c.fn)++;
    else (predicted ? c.fp : c.tn)++;
  }
  return c;
}

ConfusionCounts confusion_at(std::span<const double> peaks, const std::vector<bool>& anomalous,
                             double threshold) {
  if (peaks.size() != anomalous.size()) throw ContractError("confusion_at: size mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const bool predicted = peaks[i] > threshold;
    if (anomalous[i]) (predicted ? c.tp : c.fn)++;
    else (predicted ? c.fp : c.tn)++;
  }
  return c;
}

Scores precision_recall_f1(const ConfusionCounts& counts) {
  const auto tp = static_cast<double>(counts.tp);
  const auto fp = static_cast<double>(counts.fp);
  const auto fn = static_cast<double>(counts.fn);
  Scores s;
  s.precision = counts.tp + counts.fp > 0 ? tp / (tp + fp) : 0.0;
  s.recall = counts.tp + counts.fn > 0 ? tp / (tp + fn) : 0.0;
  s.f1 = counts.tp > 0 ? tp / (tp + 0.5 * (fp + fn)) : 0.0;
  return s;
}

double f1_harmonic(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * (precision * recall) / (precision + recall) : 0.0;
}

PrCurve pr_curve(std::span<const double> peaks, const std::vector<bool>& anomalous, double step) {
  if (peaks.size() != anomalous.size()) throw ContractError("pr_curve: size mismatch");
  if (!(step > 0.0)) throw ContractError("pr_curve: step must be positive");
  const auto n_anomalous = std::count(anomalous.begin(), anomalous.end(), true);
  if (n_anomalous == 0 || n_anomalous == static_cast<long>(anomalous.size())) {
    throw ContractError("pr_curve needs both anomalous and normal sequences");
  }
  for (double p : peaks) {
    if (!std::isfinite(p)) throw ContractError("pr_curve: peak scores must be finite");
  }
  const auto [lo, hi] = std::minmax_element(peaks.begin(), peaks.end());
  const auto k_first = static_cast<long long>(std::floor(*lo / step)) - 1;
  const auto k_last = static_cast<long long>(std::floor(*hi / step)) + 1;
  PrCurve curve;
  for (long long k = k_first; k <= k_last; ++k) {
    const double threshold = static_cast<double>(k) * step;
    const ConfusionCounts c = confusion_at(peaks, anomalous, threshold);
    const Scores s = precision_recall_f1(c);
    curve.push_back({threshold, s.precision, s.recall, s.f1, c.tp + c.fp});
  }
  return curve;
}

double auprc(std::span<const PrPoint> curve) {
  std::vector<PrPoint> pts;
  for (const PrPoint& p : curve) {
    if (p.predicted > 0) pts.push_back(p);
  }
  if (pts.empty()) return 0.0;
  std::stable_sort(pts.begin(), pts.end(), [](const PrPoint& a, const PrPoint& b) {
    if (a.recall != b.recall) return a.recall < b.recall;
    return a.threshold > b.threshold;
  });
  double area = pts.front().recall * pts.front().precision;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    area += 0.5 * (pts[k - 1].precision + pts[k].precision) * (pts[k].recall - pts[k - 1].recall);
  }
  return area;
}

double best_f1(std::span<const PrPoint> curve) {
  double best = 0.0;
  for (const PrPoint& p : curve) best = std::max(best, p.f1);
  return best;
}

double closest_f1(std::span<const PrPoint> curve) {
  double best_distance = std::numeric_limits<double>::infinity();
  double f1 = 0.0;
  for (const PrPoint& p : curve) {
    if (p.predicted == 0) continue;
    const double distance = std::hypot(1.0 - p.precision, 1.0 - p.recall);
    if (distance < best_distance) {
      best_distance = distance;
      f1 = p.f1;
    }
  }
  return f1;
}

Summary summarize(std::span<const detect::DetectionReport> reports, double step) {
  if (reports.empty()) throw ContractError("summarize: no reports");
  std::vector<TruthLabel> truth;
  std::vector<double> peaks;
  std::vector<bool> flags;
  for (const auto& r : reports) {
    truth.push_back({r.id, r.label != data::kNormalLabel});
    peaks.push_back(r.peak);
    flags.push_back(truth.back().anomalous);
  }
  Summary s;
  s.tau = reports.front().threshold;
  s.counts = confusion(reports, truth);
  s.scores = precision_recall_f1(s.counts);
  const PrCurve curve = pr_curve(peaks, flags, step);
  s.f1_best = best_f1(curve);
  s.f1_closest = closest_f1(curve);
  s.auprc = auprc(curve);
  return s;
}

void write_curve_csv(std::ostream& out, std::span<const PrPoint> curve) {
  out << "threshold,precision,recall\n" << std::setprecision(17);
  for (const PrPoint& p : curve) out << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
}

std::string summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["tau"] = s.tau;
  j["tp"] = s.counts.tp;
  j["fp"] = s.counts.fp;
  j["fn"] = s.counts.fn;
  j["tn"] = s.counts.tn;
  j["P"] = s.scores.precision;
  j["R"] = s.scores.recall;
  j["F1"] = s.scores.f1;
  j["F1_best"] = s.f1_best;
  j["F1_closest"] = s.f1_closest;
  j["AUPRC"] = s.auprc;
  return j.dump();
}

}  // namespace mavae::eval
