#include "qurious/analytics.hpp"

#include <cstdio>
#include <ostream>

#include "qurious/csv.hpp"
#include "qurious/error.hpp"

namespace qurious::analytics {

ContingencyTable::ContingencyTable(const CountGrid& counts) : counts_(counts) {
  for (std::size_t t = 0; t < corpus::kTopicCount; ++t) {
    for (std::size_t y = 0; y < corpus::kTypeCount; ++y) {
      topic_totals_[t] += counts_[t][y];
      type_totals_[y] += counts_[t][y];
      n_ += counts_[t][y];
    }
  }
}

double ContingencyTable::row_pct(Topic t) const noexcept {
  return n_ == 0 ? 0.0 : 100.0 * static_cast<double>(topic_total(t)) / static_cast<double>(n_);
}

double ContingencyTable::col_pct(QType y) const noexcept {
  return n_ == 0 ? 0.0 : 100.0 * static_cast<double>(type_total(y)) / static_cast<double>(n_);
}

namespace {

std::string pct2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void ContingencyTable::write_csv(std::ostream& out) const {
  out << "topic";
  for (const QType y : corpus::kAllTypes) out << ',' << corpus::type_name(y);
  out << ",%\n";
  for (std::size_t t = 0; t < corpus::kTopicCount; ++t) {
    const auto topic = static_cast<Topic>(t);
    out << csv::escape(corpus::topic_name(topic));
    for (std::size_t y = 0; y < corpus::kTypeCount; ++y) out << ',' << counts_[t][y];
    out << ',' << pct2(row_pct(topic)) << '\n';
  }
  out << '%';
  for (const QType y : corpus::kAllTypes) out << ',' << pct2(col_pct(y));
  out << ",\n";
}

ContingencyTable contingency(std::span<const corpus::Question> questions) {
  CountGrid grid{};
  std::string missing;
  for (const corpus::Question& q : questions) {
    if (!q.topic) {
      missing += (missing.empty() ? "" : ",") + q.id;
      continue;
    }
    const QType y = q.qtype.value_or(corpus::classify_type(q.norm_text));
    ++grid[static_cast<std::size_t>(*q.topic)][static_cast<std::size_t>(y)];
  }
  if (!missing.empty()) throw DomainError("questions without a topic: " + missing);
  return ContingencyTable(grid);
}

double lift(const ContingencyTable& table, Topic topic, QType qtype) {
  const double n = static_cast<double>(table.n());
  const double row = static_cast<double>(table.topic_total(topic));
  const double col = static_cast<double>(table.type_total(qtype));
  if (table.n() == 0 || row == 0.0 || col == 0.0) {
    throw DomainError("lift undefined for (" + std::string(corpus::topic_name(topic)) + ", " +
                      std::string(corpus::type_name(qtype)) + "): zero marginal");
  }
  const double joint = static_cast<double>(table.count(topic, qtype)) / n;
  return joint / ((row / n) * (col / n));
}

std::vector<LiftEntry> lift_report(const ContingencyTable& table, double association_threshold) {
  std::vector<LiftEntry> out;
  if (table.n() == 0) return out;
  for (std::size_t t = 0; t < corpus::kTopicCount; ++t) {
    const auto topic = static_cast<Topic>(t);
    if (table.topic_total(topic) == 0) continue;
    for (const QType y : corpus::kAllTypes) {
      if (table.type_total(y) == 0) continue;
      const double l = lift(table, topic, y);
      out.push_back({topic, y, l, l >= association_threshold});
    }
  }
  return out;
}

void write_lift_csv(std::ostream& out, std::span<const LiftEntry> entries, double threshold) {
  out << "topic,type,lift,associated\n";
  char buf[32];
  for (const LiftEntry& e : entries) {
    std::snprintf(buf, sizeof buf, "%.6f", e.lift);
    out << csv::escape(corpus::topic_name(e.topic)) << ',' << corpus::type_name(e.qtype) << ','
        << buf << ',' << (e.lift >= threshold ? 1 : 0) << '\n';
  }
}

std::vector<std::pair<std::string, std::size_t>> word_frequencies(
    std::span<const corpus::Question> questions, const std::vector<std::string>& stopwords) {
  return corpus::token_frequencies(questions, stopwords);
}

const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> words{
      "a",    "an",   "and",  "are",  "as",   "at",   "be",   "by",   "can",  "do",
      "does", "for",  "from", "i",    "in",   "is",   "it",   "of",   "on",   "or",
      "that", "the",  "this", "to",   "was",  "we",   "with", "you",  "your", "there"};
  return words;
}

void write_frequencies_csv(std::ostream& out,
                           std::span<const std::pair<std::string, std::size_t>> freqs) {
  out << "token,count\n";
  for (const auto& [tok, n] : freqs) out << csv::escape(tok) << ',' << n << '\n';
}

}  // namespace qurious::analytics
