#include "qurious/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "qurious/error.hpp"

namespace qurious::calibration {

double named_threshold(std::string_view name) {
  if (name == "qe") return defaults::kTauQe;
  if (name == "qe-best") return defaults::kTauQeBest;
  if (name == "qa") return defaults::kTauQa;
  throw DomainError("unknown named threshold: " + std::string(name));
}

std::string_view criterion_name(Criterion c) noexcept {
  switch (c) {
    case Criterion::best_accuracy: return "best_accuracy";
    case Criterion::best_precision: return "best_precision";
    case Criterion::mean_positive: return "mean_positive";
  }
  return "unknown";
}

Criterion parse_criterion(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  for (const Criterion c :
       {Criterion::best_accuracy, Criterion::best_precision, Criterion::mean_positive}) {
    if (s == criterion_name(c)) return c;
  }
  throw DomainError("unknown criterion: " + std::string(name));
}

void ThresholdCurve::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "threshold,accuracy,precision,recall\n";
  for (const CurvePoint& p : points) {
    out << p.threshold << ',' << p.accuracy << ',' << p.precision << ',' << p.recall << '\n';
  }
  out.precision(old);
}

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty()) throw DomainError("threshold calibration needs at least one score");
  if (scores.size() != labels.size()) {
    throw DomainError("scores and labels differ in length: " + std::to_string(scores.size()) +
                      " vs " + std::to_string(labels.size()));
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw DomainError("non-finite score at " + std::to_string(i));
    if (labels[i] != 0 && labels[i] != 1) throw DomainError("label must be 0 or 1");
  }
}

}  // namespace

ThresholdCurve threshold_sweep(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));

  ThresholdCurve curve;
  // Walk distinct scores ascending; `below_pos`/`below_neg` count pairs with
  // score strictly under the current threshold (predicted 0).
  std::size_t below_pos = 0, below_neg = 0;
  std::size_t i = 0;
  while (i < n) {
    const double t = scores[order[i]];
    const std::size_t tp = positives - below_pos;
    const std::size_t predicted = n - below_pos - below_neg;
    const std::size_t tn = below_neg;
    CurvePoint p;
    p.threshold = t;
    p.accuracy = static_cast<double>(tp + tn) / static_cast<double>(n);
    p.precision = predicted == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(predicted);
    p.recall = positives == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(positives);
    curve.points.push_back(p);
    while (i < n && scores[order[i]] == t) {
      (labels[order[i]] == 1 ? below_pos : below_neg) += 1;
      ++i;
    }
  }
  return curve;
}

double select_threshold(ThresholdCurve& curve, std::span<const double> scores,
                        std::span<const int> labels, Criterion criterion) {
  check_inputs(scores, labels);
  const bool any_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (criterion != Criterion::best_accuracy && !any_pos) {
    throw NoPositivesError(std::string(criterion_name(criterion)) + " needs at least one positive label");
  }

  double tau = 0.0;
  if (criterion == Criterion::mean_positive) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (labels[i] == 1) {
        sum += scores[i];
        ++count;
      }
    }
    tau = sum / static_cast<double>(count);
  } else {
    if (curve.points.empty()) throw DomainError("empty threshold curve");
    // Points ascend by threshold, so ">=" keeps the largest threshold on ties.
    const CurvePoint* best = &curve.points.front();
    for (const CurvePoint& p : curve.points) {
      if (criterion == Criterion::best_accuracy) {
        if (p.accuracy >= best->accuracy) best = &p;
      } else if (p.precision > best->precision ||
                 (p.precision == best->precision && p.recall >= best->recall)) {
        best = &p;
      }
    }
    tau = best->threshold;
  }
  curve.selected = Selection{criterion, tau};
  return tau;
}

double select_threshold(std::span<const double> scores, std::span<const int> labels,
                        Criterion criterion) {
  ThresholdCurve curve;
  if (criterion != Criterion::mean_positive) curve = threshold_sweep(scores, labels);
  return select_threshold(curve, scores, labels, criterion);
}

std::vector<int> classify_pairs(std::span<const double> scores, double tau) {
  if (!std::isfinite(tau)) throw DomainError("threshold must be finite");
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= tau ? 1 : 0;
  return out;
}

RetrievalEval retrieval_metrics(std::span<const std::optional<std::string>> top1,
                                std::span<const std::vector<std::string>> gold,
                                const std::vector<bool>& accepted) {
  if (top1.size() != gold.size() || top1.size() != accepted.size()) {
    throw DomainError("retrieval_metrics: misaligned inputs");
  }
  RetrievalEval e;
  e.evaluated = top1.size();
  for (std::size_t i = 0; i < top1.size(); ++i) {
    if (gold[i].empty()) throw DomainError("retrieval_metrics: question " + std::to_string(i) + " has no gold answer");
    if (!accepted[i] || !top1[i]) continue;
    ++e.answered;
    if (std::find(gold[i].begin(), gold[i].end(), *top1[i]) != gold[i].end()) ++e.correct;
  }
  if (e.evaluated > 0) {
    e.accuracy_at_1 = static_cast<double>(e.correct) / static_cast<double>(e.evaluated);
    e.recall_at_1 = e.accuracy_at_1;
  }
  if (e.answered > 0) {
    e.precision_at_1 = static_cast<double>(e.correct) / static_cast<double>(e.answered);
  } else {
    e.precision_undefined = true;
  }
  return e;
}

}  // namespace qurious::calibration
