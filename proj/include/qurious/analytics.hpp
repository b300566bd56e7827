#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qurious/corpus.hpp"

namespace qurious::analytics {

using corpus::QType;
using corpus::Topic;

using CountGrid = std::array<std::array<std::uint64_t, corpus::kTypeCount>, corpus::kTopicCount>;

/// topic x type counts with marginals.
class ContingencyTable {
 public:
  ContingencyTable() = default;
  explicit ContingencyTable(const CountGrid& counts);

  std::uint64_t count(Topic t, QType y) const noexcept {
    return counts_[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
  }
  std::uint64_t topic_total(Topic t) const noexcept { return topic_totals_[static_cast<std::size_t>(t)]; }
  std::uint64_t type_total(QType y) const noexcept { return type_totals_[static_cast<std::size_t>(y)]; }
  std::uint64_t n() const noexcept { return n_; }
  const CountGrid& counts() const noexcept { return counts_; }

  /// Topic share of all questions, in percent (0 when n == 0).
  double row_pct(Topic t) const noexcept;
  /// Type share of all questions, in percent.
  double col_pct(QType y) const noexcept;

  /// Topic rows, type columns, a "%" column of row shares and a "%" row of
  /// column shares, two decimals.
  void write_csv(std::ostream& out) const;

 private:
  CountGrid counts_{};
  std::array<std::uint64_t, corpus::kTopicCount> topic_totals_{};
  std::array<std::uint64_t, corpus::kTypeCount> type_totals_{};
  std::uint64_t n_ = 0;
};

/// Tallies questions. A missing type is filled by classify_type; a missing
/// topic throws DomainError listing the offending ids.
ContingencyTable contingency(std::span<const corpus::Question> questions);

/// P(topic, type) / (P(topic) P(type)). Throws DomainError when n or either
/// marginal is zero.
double lift(const ContingencyTable& table, Topic topic, QType qtype);

struct LiftEntry {
  Topic topic;
  QType qtype;
  double lift;
  bool associated;  // lift >= threshold
};

inline constexpr double kDefaultAssociationLift = 2.0;

/// Every cell with positive marginals, row-major.
std::vector<LiftEntry> lift_report(const ContingencyTable& table,
                                   double association_threshold = kDefaultAssociationLift);
/// CSV topic,type,lift,associated
void write_lift_csv(std::ostream& out, std::span<const LiftEntry> entries, double threshold);

/// Case-folded, punctuation-stripped token counts, descending then
/// alphabetical; `stopwords` are dropped.
std::vector<std::pair<std::string, std::size_t>> word_frequencies(
    std::span<const corpus::Question> questions, const std::vector<std::string>& stopwords = {});

/// A small English stopword list for the optional frequency filter.
const std::vector<std::string>& default_stopwords();

/// CSV token,count
void write_frequencies_csv(std::ostream& out,
                           std::span<const std::pair<std::string, std::size_t>> freqs);

}  // namespace qurious::analytics
