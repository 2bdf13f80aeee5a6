#include "atmgad/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "atmgad/error.hpp"

namespace atmgad {

namespace {

void check_inputs(const char* op, std::span<const double> scores, std::span<const std::int8_t> labels,
                  bool need_both) {
  if (scores.size() != labels.size())
    throw ValidationError(std::string(op) + ": " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(labels.size()) + " labels");
  if (scores.empty()) throw ValidationError(std::string(op) + ": no scores");
  std::size_t pos = 0;
  for (auto y : labels) {
    if (y != 0 && y != 1) throw ValidationError(std::string(op) + ": labels must be 0 or 1");
    pos += y == 1;
  }
  if (need_both && (pos == 0 || pos == labels.size()))
    throw ValidationError(std::string(op) + ": both classes must be present");
}

// Indices in descending score order.
std::vector<std::size_t> by_score_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::int8_t> labels) {
  check_inputs("auc", scores, labels, true);
  // Walk tie groups from the top: each positive in a group beats every
  // negative below it and ties the negatives inside the group.
  auto idx = by_score_desc(scores);
  double wins = 0.0, neg_total = 0.0, pos_total = 0.0;
  for (auto y : labels) (y ? pos_total : neg_total) += 1.0;
  double neg_above = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double p = 0.0, q = 0.0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? p : q) += 1.0;
      ++j;
    }
    wins += p * (neg_total - neg_above - q) + 0.5 * p * q;
    neg_above += q;
    i = j;
  }
  return wins / (pos_total * neg_total);
}

double auprc(std::span<const double> scores, std::span<const std::int8_t> labels) {
  check_inputs("auprc", scores, labels, true);
  auto idx = by_score_desc(scores);
  double pos_total = 0.0;
  for (auto y : labels) pos_total += y;
  double tp = 0.0, seen = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      tp += labels[idx[j]];
      seen += 1.0;
      ++j;
    }
    double recall = tp / pos_total;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double accuracy(std::span<const double> scores, std::span<const std::int8_t> labels, double threshold) {
  check_inputs("accuracy", scores, labels, false);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) correct += (scores[i] >= threshold) == (labels[i] == 1);
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

}  // namespace atmgad
