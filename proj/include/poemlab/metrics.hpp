#pragma once

// OOD detection metrics. Scores follow the "higher = more ID" convention and
// ID is the positive class throughout.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace poemlab {

struct ScoreSet {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;
};

struct MetricsReport {
  double fpr95 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  double id_acc = 0.0;
  double threshold = 0.0;  // gamma

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
  static std::string csv_header();  // fpr95,auroc,aupr,id_acc,gamma
  std::string to_csv_row() const;
};

// Largest gamma with fraction(id_scores >= gamma) >= target_tpr. With the
// scores sorted ascending this is the k-th smallest, k = n - ceil(tpr * n) + 1.
double threshold_at_tpr(std::span<const double> id_scores, double target_tpr = 0.95);

// Fraction of OOD scores >= threshold_at_tpr(id_scores, tpr).
double fpr_at_tpr(const ScoreSet& scores, double tpr = 0.95);

// Mann-Whitney statistic P(id > ood) + 0.5 P(id = ood), by sort and midranks.
double auroc(const ScoreSet& scores);

// Average precision with ID positive: descending sweep, tied scores handled
// as one block, sum of delta-recall times precision at each block end.
double aupr(const ScoreSet& scores);

// Fraction of predictions equal to labels. Throws LengthMismatch.
double id_accuracy(std::span<const int> predictions, std::span<const int> labels);

MetricsReport evaluate(const ScoreSet& scores, double id_acc, double tpr = 0.95);

}  // namespace poemlab
