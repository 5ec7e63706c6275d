// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mavae/detect/detect.hpp"

namespace mavae::eval {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct TruthLabel {
  std::string id;
  bool anomalous = false;
};

/// Sequence-level counts; a report is positive iff its peak exceeds its own
/// threshold. Ids must align in order.
ConfusionCounts confusion(std::span<const detect::DetectionReport> reports,
                          std::span<const TruthLabel> truth);
/// Counts at one threshold: positive iff peak > threshold.
ConfusionCounts confusion_at(std::span<const double> peaks, const std::vector<bool>& anomalous,
                             double threshold);

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// P = TP/(TP+FP) (0 when nothing is predicted), R = TP/(TP+FN) (0 without
/// anomalies), F1 = TP / (TP + (FP+FN)/2) (0 when TP = 0).
Scores precision_recall_f1(const ConfusionCounts& counts);
/// Harmonic-mean form 2PR/(P+R), 0 when P+R = 0.
double f1_harmonic(double precision, double recall);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t predicted = 1;  // TP + FP; points with 0 have no defined precision
};

using PrCurve = std::vector<PrPoint>;

/// Thresholds k*step from below min(peak) to above max(peak).
PrCurve pr_curve(std::span<const double> peaks, const std::vector<bool>& anomalous, double step = 0.1);

/// Trapezoidal area under P(R). Points without predictions are skipped, the
/// rest are ordered by recall (ties by descending threshold) and the curve is
/// extended flat to R = 0 from its lowest-recall point.
double auprc(std::span<const PrPoint> curve);
/// Largest F1 over the curve.
double best_f1(std::span<const PrPoint> curve);
/// F1 of the point closest (Euclidean) to P = R = 1.
double closest_f1(std::span<const PrPoint> curve);

struct Summary {
  double tau = 0.0;
  ConfusionCounts counts;
  Scores scores;
  double f1_best = 0.0;
  double f1_closest = 0.0;
  double auprc = 0.0;
};

Summary summarize(std::span<const detect::DetectionReport> reports, double step = 0.1);

/// CSV columns: threshold,precision,recall
void write_curve_csv(std::ostream& out, std::span<const PrPoint> curve);
/// {"tau","tp","fp","fn","tn","P","R","F1","F1_best","F1_closest","AUPRC"}
std::string summary_json(const Summary& summary);

}  // namespace mavae::eval
