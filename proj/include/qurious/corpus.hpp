#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qurious::corpus {

/// Question types, in the column order of the type x topic table.
enum class QType : std::uint8_t { HOW, WHAT, WHEN, WHERE, WHICH, WHO, WHY, IF, OTHER };
inline constexpr std::size_t kTypeCount = 9;

/// The ten Yahoo! Answers topics, in table row order.
enum class Topic : std::uint8_t {
  BusinessFinance,
  ComputersInternet,
  EducationReference,
  EntertainmentMusic,
  FamilyRelationships,
  Health,
  PoliticsGovernment,
  ScienceMathematics,
  SocietyCulture,
  Sports,
};
inline constexpr std::size_t kTopicCount = 10;

inline constexpr std::array<QType, kTypeCount> kAllTypes{
    QType::HOW, QType::WHAT, QType::WHEN, QType::WHERE, QType::WHICH,
    QType::WHO, QType::WHY,  QType::IF,   QType::OTHER};

/// Lower-case keyword form: "how", ..., "if", "other".
std::string_view type_name(QType t) noexcept;
/// Accepts either case. Throws DomainError for unknown names.
QType parse_type(std::string_view name);

/// Display name, e.g. "Science & Mathematics".
std::string_view topic_name(Topic t) noexcept;
/// Accepts the display name or a case-insensitive alias with "and"/"&"
/// variations. Throws DomainError for unknown names.
Topic parse_topic(std::string_view name);

struct Question {
  std::string id;
  std::string raw_text;
  std::string norm_text;
  std::size_t token_count = 0;
  std::optional<QType> qtype;
  std::optional<Topic> topic;
  std::optional<std::string> source_tag;
};

enum class InputFormat { lines, jsonl };

/// One Question per non-blank record. Lines get ids q0001, q0002, ... by
/// record ordinal; jsonl records without an "id" get the same scheme.
/// Throws ParseError (with 1-based line) on malformed JSON, missing "text",
/// invalid UTF-8 or a duplicate id.
std::vector<Question> parse_corpus(std::istream& in, InputFormat format);
std::vector<Question> parse_corpus(std::string_view data, InputFormat format);

enum class RemovalReason { duplicate, too_short };
std::string_view reason_name(RemovalReason r) noexcept;

struct Removal {
  std::string id;
  RemovalReason reason;
};

struct RemovalReport {
  std::vector<Removal> removals;
  /// CSV "id,reason" with a header row.
  void write_csv(std::ostream& out) const;
};

struct FilterResult {
  std::vector<Question> kept;
  RemovalReport removed;
};

/// Drops case-folded exact duplicates of an earlier question, then
/// questions with fewer than `min_tokens` tokens. A question that is both a
/// duplicate and short is reported as a duplicate.
FilterResult normalize_and_filter(std::vector<Question> questions, std::size_t min_tokens = 3);

/// Keyword typing: any "if" token wins; otherwise the earliest of
/// how/what/when/where/which/who/why; otherwise OTHER.
QType classify_type(std::string_view norm_text);

struct CorpusStats {
  std::size_t question_count = 0;
  std::size_t vocab_size = 0;
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  double mean_len = 0.0;
  double pct_within_10 = 0.0;
  std::vector<std::pair<std::string, std::size_t>> token_frequencies;
};

CorpusStats corpus_stats(const std::vector<Question>& questions);

/// Token counts over all questions, descending by count then ascending by
/// token. Tokens in `stopwords` (compared after case folding) are skipped.
std::vector<std::pair<std::string, std::size_t>> token_frequencies(
    std::span<const Question> questions, const std::vector<std::string>& stopwords = {});

/// Questions JSONL as passed between pipeline stages: id, text, norm_text,
/// token_count and, when set, type, topic, source.
void write_questions_jsonl(std::ostream& out, const std::vector<Question>& questions);
/// Reads the stage JSONL back. Fields beyond those parse_corpus knows about
/// (norm_text, type, topic) are honoured when present.
std::vector<Question> read_questions_jsonl(std::istream& in);

}  // namespace qurious::corpus
