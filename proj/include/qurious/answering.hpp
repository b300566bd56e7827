#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qurious/calibration.hpp"
#include "qurious/corpus.hpp"
#include "qurious/embedding.hpp"
#include "qurious/vectorstore.hpp"

namespace qurious::answering {

struct Sentence {
  std::string sid;
  std::string text;
  std::optional<std::string> title;
};

/// Sentence JSONL: {"sid", "text", "title"?} per line. Throws ParseError on
/// malformed records, a missing field or a repeated sid.
std::vector<Sentence> read_sentences_jsonl(std::istream& in);
void write_sentences_jsonl(std::ostream& out, std::span<const Sentence> sentences);

struct BuildStats {
  std::size_t sentences = 0;
  std::size_t distinct_embeddings = 0;
  std::size_t duplicate_embeddings = 0;  // rows bit-identical to an earlier row
  std::size_t ncells = 0;
  std::uint64_t seed = 0;
};

struct KnowledgeBase {
  std::vector<Sentence> sentences;  // row order of embeddings
  embedding::EmbeddingMatrix embeddings;
  vectorstore::IvfIndex index;
  BuildStats stats;

  const Sentence& sentence(std::size_t row) const { return sentences[row]; }
};

/// Embeds, normalizes and indexes the sentences. ncells == 0 picks
/// default_ncells(n). Throws DomainError on an empty input; provider
/// failures propagate.
KnowledgeBase build_kb(std::vector<Sentence> sentences, embedding::Embedder& embedder,
                       std::size_t ncells, std::uint64_t seed);

/// Writes <stem>.qivf, <stem>.qemb (+ ids) and <stem>.sentences.jsonl.
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& qivf_path);
KnowledgeBase load_kb(const std::filesystem::path& qivf_path);
std::filesystem::path sentences_path_for(const std::filesystem::path& qivf);

struct AnswerHit {
  std::string question_id;
  std::string sid;
  std::string text;
  float score = 0.0f;
  bool accepted = false;  // score >= tau_qa

  friend bool operator==(const AnswerHit&, const AnswerHit&) = default;
};

struct AnswerOptions {
  double tau_qa = calibration::defaults::kTauQa;
  std::size_t k = 1;
  std::size_t nprobe = 0;  // 0: index default
};

/// Top-k sentences for an already-embedded question, best first, each
/// flagged accepted iff score >= tau_qa. Throws DomainError on dim mismatch.
std::vector<AnswerHit> answer_topk(const std::string& question_id, std::span<const float> query,
                                   const KnowledgeBase& kb, const AnswerOptions& options);

/// Best sentence for the question, or nothing when the KB is empty.
std::optional<AnswerHit> answer(const std::string& question_id, std::span<const float> query,
                                const KnowledgeBase& kb, const AnswerOptions& options);

/// Best sentence only if it clears tau_qa.
std::optional<AnswerHit> answer_accepted(const std::string& question_id,
                                         std::span<const float> query, const KnowledgeBase& kb,
                                         const AnswerOptions& options);

/// Embeds each question with `embedder` and answers it; output order follows
/// the input.
std::vector<AnswerHit> answer_all(std::span<const corpus::Question> questions,
                                  embedding::Embedder& embedder, const KnowledgeBase& kb,
                                  const AnswerOptions& options);

/// CSV question_id,sid,score,accepted,answer
void write_answers_csv(std::ostream& out, std::span<const AnswerHit> hits);
std::vector<AnswerHit> read_answers_csv(std::istream& in);

struct Cell {
  std::size_t accepted = 0;
  std::size_t total = 0;
};

/// Accepted/total per (topic, type) with row, column and grand totals.
struct AnswerabilityReport {
  std::array<std::array<Cell, corpus::kTypeCount>, corpus::kTopicCount> cells{};
  std::array<Cell, corpus::kTopicCount> topic_totals{};
  std::array<Cell, corpus::kTypeCount> type_totals{};
  Cell overall;

  double overall_ratio() const noexcept;
  /// Topic rows x type columns of "a/n", an "All" column and row, then
  /// numeric accepted,total,ratio columns.
  void write_csv(std::ostream& out) const;
};

/// Every question needs a type and a topic; a hit naming an unknown question
/// id throws DomainError. Questions without a hit count as not accepted.
AnswerabilityReport answerability_report(std::span<const AnswerHit> hits,
                                         std::span<const corpus::Question> questions);

}  // namespace qurious::answering
