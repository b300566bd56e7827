#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qurious::calibration {

/// Thresholds reported for the published QBERT models, usable without
/// calibration data.
namespace defaults {
/// Question equivalence, generalist model (best-accuracy on QQP).
inline constexpr double kTauQe = 0.825;
/// Question equivalence, best single-task model.
inline constexpr double kTauQeBest = 0.875;
/// Knowledge-base answering: mean similarity of correct WikiQA answers.
inline constexpr double kTauQa = 0.688;
}  // namespace defaults

/// Looks up "qe", "qe-best" or "qa". Throws DomainError otherwise.
double named_threshold(std::string_view name);

enum class Criterion { best_accuracy, best_precision, mean_positive };
std::string_view criterion_name(Criterion c) noexcept;
/// Accepts "best_accuracy" or "best-accuracy" spellings.
Criterion parse_criterion(std::string_view name);

struct CurvePoint {
  double threshold = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct Selection {
  Criterion criterion;
  double tau;
};

struct ThresholdCurve {
  std::vector<CurvePoint> points;  // thresholds strictly increasing
  std::optional<Selection> selected;

  /// CSV "threshold,accuracy,precision,recall".
  void write_csv(std::ostream& out) const;
};

/// One point per distinct score; predictions are score >= threshold.
/// Precision with no predicted positives is 1. Recall with no positive
/// labels is 1. Throws DomainError on empty input, length mismatch, a
/// non-finite score or a label outside {0, 1}.
ThresholdCurve threshold_sweep(std::span<const double> scores, std::span<const int> labels);

/// best_accuracy: highest accuracy, ties to the larger threshold.
/// best_precision: highest precision, then higher recall, then larger
/// threshold. mean_positive: mean score of positive pairs.
/// Throws NoPositivesError for best_precision/mean_positive without a
/// positive label.
double select_threshold(std::span<const double> scores, std::span<const int> labels,
                        Criterion criterion);
/// Same, reusing a precomputed curve for the sweep criteria. The curve must
/// come from the same scores/labels.
double select_threshold(ThresholdCurve& curve, std::span<const double> scores,
                        std::span<const int> labels, Criterion criterion);

/// 1 iff score >= tau.
std::vector<int> classify_pairs(std::span<const double> scores, double tau);

struct RetrievalEval {
  double accuracy_at_1 = 0.0;
  double precision_at_1 = 0.0;
  double recall_at_1 = 0.0;
  std::size_t answered = 0;
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  /// Set when nothing was answered and precision_at_1 is reported as 0.
  bool precision_undefined = false;
};

/// Top-1 retrieval metrics. top1[i] is the retrieved id (if any), gold[i]
/// the set of acceptable ids, accepted[i] whether the hit cleared the
/// threshold. A question counts as correct when its hit is accepted and in
/// gold. Throws DomainError on misaligned lengths or an empty gold set.
RetrievalEval retrieval_metrics(std::span<const std::optional<std::string>> top1,
                                std::span<const std::vector<std::string>> gold,
                                const std::vector<bool>& accepted);

}  // namespace qurious::calibration
