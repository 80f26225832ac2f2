#include "poemlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "poemlab/errors.hpp"

namespace poemlab {

namespace {

void require_nonempty(const ScoreSet& s) {
  if (s.id_scores.empty() || s.ood_scores.empty())
    throw LengthMismatch("detection metrics need non-empty ID and OOD score lists");
}

struct Labeled {
  double score;
  bool positive;
};

std::vector<Labeled> merge_sorted_desc(const ScoreSet& s) {
  std::vector<Labeled> all;
  all.reserve(s.id_scores.size() + s.ood_scores.size());
  for (double v : s.id_scores) all.push_back({v, true});
  for (double v : s.ood_scores) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Labeled& a, const Labeled& b) { return a.score > b.score; });
  return all;
}

}  // namespace

double threshold_at_tpr(std::span<const double> id_scores, double target_tpr) {
  if (id_scores.empty()) throw LengthMismatch("threshold_at_tpr: no ID scores");
  if (!(target_tpr > 0.0 && target_tpr <= 1.0))
    throw ConfigError("tpr", "target TPR must lie in (0, 1]");
  std::vector<double> sorted(id_scores.begin(), id_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  // Guard against 0.95 * 100 landing a hair above 95.
  auto needed = static_cast<std::size_t>(std::ceil(target_tpr * static_cast<double>(n) - 1e-9));
  needed = std::clamp<std::size_t>(needed, 1, n);
  return sorted[n - needed];
}

double fpr_at_tpr(const ScoreSet& scores, double tpr) {
  require_nonempty(scores);
  const double gamma = threshold_at_tpr(scores.id_scores, tpr);
  std::size_t fp = 0;
  for (double v : scores.ood_scores)
    if (v >= gamma) ++fp;
  return static_cast<double>(fp) / static_cast<double>(scores.ood_scores.size());
}

double auroc(const ScoreSet& scores) {
  require_nonempty(scores);
  auto all = merge_sorted_desc(scores);
  // Ascending midranks; sum over ID.
  std::reverse(all.begin(), all.end());
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (all[k].positive) rank_sum += mid;
    i = j;
  }
  const double n_pos = static_cast<double>(scores.id_scores.size());
  const double n_neg = static_cast<double>(scores.ood_scores.size());
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double aupr(const ScoreSet& scores) {
  require_nonempty(scores);
  const auto all = merge_sorted_desc(scores);
  const double n_pos = static_cast<double>(scores.id_scores.size());
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) {
      (all[j].positive ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / n_pos;
    if (recall > prev_recall) ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double id_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw LengthMismatch("id_accuracy: predictions and labels differ in length");
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (predictions[i] == labels[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

MetricsReport evaluate(const ScoreSet& scores, double id_acc, double tpr) {
  MetricsReport r;
  r.threshold = threshold_at_tpr(scores.id_scores, tpr);
  r.fpr95 = fpr_at_tpr(scores, tpr);
  r.auroc = auroc(scores);
  r.aupr = aupr(scores);
  r.id_acc = id_acc;
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["fpr95"] = fpr95;
  j["auroc"] = auroc;
  j["aupr"] = aupr;
  j["id_acc"] = id_acc;
  j["gamma"] = threshold;
  return j.dump();
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricsReport r;
  r.fpr95 = j.at("fpr95").get<double>();
  r.auroc = j.at("auroc").get<double>();
  r.aupr = j.at("aupr").get<double>();
  r.id_acc = j.at("id_acc").get<double>();
  r.threshold = j.at("gamma").get<double>();
  return r;
}

std::string MetricsReport::csv_header() { return "fpr95,auroc,aupr,id_acc,gamma"; }

std::string MetricsReport::to_csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << fpr95 << ',' << auroc << ',' << aupr << ',' << id_acc << ',' << threshold;
  return os.str();
}

}  // namespace poemlab
