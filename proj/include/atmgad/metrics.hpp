#pragma once

#include <cstdint>
#include <span>

namespace atmgad {

// Both classes must be present; labels are 0/1. Throws ValidationError
// otherwise.
// Mann-Whitney form: P(score_pos > score_neg) + 0.5 P(tie).
double auc(std::span<const double> scores, std::span<const std::int8_t> labels);
// Average precision: sum over descending unique thresholds of
// (recall_k - recall_{k-1}) * precision_k.
double auprc(std::span<const double> scores, std::span<const std::int8_t> labels);
// Fraction of nodes with (score >= threshold) == label.
double accuracy(std::span<const double> scores, std::span<const std::int8_t> labels, double threshold = 0.5);

}  // namespace atmgad
