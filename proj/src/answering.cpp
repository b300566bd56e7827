#include "qurious/answering.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "qurious/csv.hpp"
#include "qurious/error.hpp"

namespace qurious::answering {

using nlohmann::json;

std::vector<Sentence> read_sentences_jsonl(std::istream& in) {
  std::vector<Sentence> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Sentence s;
    try {
      const json rec = json::parse(line);
      s.sid = rec.at("sid").get<std::string>();
      s.text = rec.at("text").get<std::string>();
      if (const auto it = rec.find("title"); it != rec.end() && it->is_string()) {
        s.title = it->get<std::string>();
      }
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad sentence record: ") + e.what());
    }
    if (s.sid.empty()) throw ParseError(line_no, "empty sid");
    if (!seen.insert(s.sid).second) throw ParseError(line_no, "duplicate sid " + s.sid);
    out.push_back(std::move(s));
  }
  return out;
}

void write_sentences_jsonl(std::ostream& out, std::span<const Sentence> sentences) {
  for (const Sentence& s : sentences) {
    json rec = {{"sid", s.sid}, {"text", s.text}};
    if (s.title) rec["title"] = *s.title;
    out << rec.dump() << '\n';
  }
}

KnowledgeBase build_kb(std::vector<Sentence> sentences, embedding::Embedder& embedder,
                       std::size_t ncells, std::uint64_t seed) {
  if (sentences.empty()) throw DomainError("build_kb: no sentences");
  std::vector<std::string> ids, texts;
  ids.reserve(sentences.size());
  texts.reserve(sentences.size());
  for (const Sentence& s : sentences) {
    ids.push_back(s.sid);
    texts.push_back(s.text);
  }
  embedding::EmbeddingMatrix emb = embedder.embed(ids, texts);
  emb.l2_normalize();
  if (ncells == 0) ncells = vectorstore::default_ncells(emb.count());
  ncells = std::min(ncells, emb.count());

  BuildStats stats;
  stats.sentences = sentences.size();
  stats.ncells = ncells;
  stats.seed = seed;
  std::unordered_set<std::string_view> distinct;
  const std::size_t row_bytes = emb.dim() * sizeof(float);
  for (std::size_t r = 0; r < emb.count(); ++r) {
    distinct.emplace(reinterpret_cast<const char*>(emb.row(r).data()), row_bytes);
  }
  stats.distinct_embeddings = distinct.size();
  stats.duplicate_embeddings = emb.count() - distinct.size();

  vectorstore::IvfIndex index = vectorstore::ivf_build(emb, ncells, seed);
  return {std::move(sentences), std::move(emb), std::move(index), stats};
}

std::filesystem::path sentences_path_for(const std::filesystem::path& qivf) {
  std::filesystem::path p = qivf;
  p.replace_extension(".sentences.jsonl");
  return p;
}

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& qivf_path) {
  vectorstore::save_index(kb.index, qivf_path);
  embedding::save_embeddings(kb.embeddings, vectorstore::qemb_path_for(qivf_path));
  std::ofstream out(sentences_path_for(qivf_path), std::ios::trunc);
  if (!out) throw Error("cannot write " + sentences_path_for(qivf_path).string());
  write_sentences_jsonl(out, kb.sentences);
}

KnowledgeBase load_kb(const std::filesystem::path& qivf_path) {
  KnowledgeBase kb;
  kb.embeddings = embedding::load_embeddings(vectorstore::qemb_path_for(qivf_path));
  kb.index = vectorstore::load_index(qivf_path, kb.embeddings);
  std::ifstream in(sentences_path_for(qivf_path));
  if (!in) throw Error("cannot open " + sentences_path_for(qivf_path).string());
  std::vector<Sentence> sentences = read_sentences_jsonl(in);
  // Reorder to embedding row order.
  std::unordered_map<std::string, std::size_t> by_sid;
  for (std::size_t i = 0; i < sentences.size(); ++i) by_sid.emplace(sentences[i].sid, i);
  kb.sentences.reserve(kb.embeddings.count());
  for (const std::string& id : kb.embeddings.ids()) {
    const auto it = by_sid.find(id);
    if (it == by_sid.end()) throw DomainError("KB row " + id + " has no sentence");
    kb.sentences.push_back(sentences[it->second]);
  }
  kb.stats.sentences = kb.sentences.size();
  kb.stats.ncells = kb.index.ncells();
  kb.stats.seed = kb.index.build_seed();
  return kb;
}

std::vector<AnswerHit> answer_topk(const std::string& question_id, std::span<const float> query,
                                   const KnowledgeBase& kb, const AnswerOptions& options) {
  if (query.size() != kb.embeddings.dim()) {
    throw DomainError("question dim " + std::to_string(query.size()) + " != KB dim " +
                      std::to_string(kb.embeddings.dim()));
  }
  if (kb.embeddings.empty()) return {};
  const std::size_t nprobe = options.nprobe == 0 ? kb.index.default_nprobe() : options.nprobe;
  const auto hits = vectorstore::ivf_search(kb.index, query, std::max<std::size_t>(options.k, 1), nprobe);
  std::vector<AnswerHit> out;
  out.reserve(hits.size());
  for (const auto& h : hits) {
    const Sentence& s = kb.sentence(h.row);
    out.push_back({question_id, s.sid, s.text, h.score, static_cast<double>(h.score) >= options.tau_qa});
  }
  return out;
}

std::optional<AnswerHit> answer(const std::string& question_id, std::span<const float> query,
                                const KnowledgeBase& kb, const AnswerOptions& options) {
  AnswerOptions one = options;
  one.k = 1;
  auto hits = answer_topk(question_id, query, kb, one);
  if (hits.empty()) return std::nullopt;
  return std::move(hits.front());
}

std::optional<AnswerHit> answer_accepted(const std::string& question_id,
                                         std::span<const float> query, const KnowledgeBase& kb,
                                         const AnswerOptions& options) {
  auto hit = answer(question_id, query, kb, options);
  if (hit && !hit->accepted) return std::nullopt;
  return hit;
}

std::vector<AnswerHit> answer_all(std::span<const corpus::Question> questions,
                                  embedding::Embedder& embedder, const KnowledgeBase& kb,
                                  const AnswerOptions& options) {
  std::vector<std::string> ids, texts;
  for (const corpus::Question& q : questions) {
    ids.push_back(q.id);
    texts.push_back(q.norm_text);
  }
  embedding::EmbeddingMatrix qemb = embedder.embed(ids, texts);
  qemb.l2_normalize();
  std::vector<AnswerHit> out;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (auto hit = answer(questions[i].id, qemb.row(i), kb, options)) out.push_back(std::move(*hit));
  }
  return out;
}

void write_answers_csv(std::ostream& out, std::span<const AnswerHit> hits) {
  out << "question_id,sid,score,accepted,answer\n";
  char buf[32];
  for (const AnswerHit& h : hits) {
    const auto res = std::to_chars(buf, buf + sizeof buf, h.score);
    out << csv::escape(h.question_id) << ',' << csv::escape(h.sid) << ','
        << std::string_view(buf, res.ptr - buf) << ',' << (h.accepted ? 1 : 0) << ','
        << csv::escape(h.text) << '\n';
  }
}

std::vector<AnswerHit> read_answers_csv(std::istream& in) {
  std::string line;
  std::vector<AnswerHit> out;
  if (!std::getline(in, line)) return out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line, line_no);
    if (f.size() != 5) throw ParseError(line_no, "answers CSV needs 5 fields");
    AnswerHit h{f[0], f[1], f[4], 0.0f, f[3] == "1"};
    const auto r = std::from_chars(f[2].data(), f[2].data() + f[2].size(), h.score);
    if (r.ec != std::errc()) throw ParseError(line_no, "bad score");
    out.push_back(std::move(h));
  }
  return out;
}

double AnswerabilityReport::overall_ratio() const noexcept {
  return overall.total == 0 ? 0.0
                            : static_cast<double>(overall.accepted) / static_cast<double>(overall.total);
}

namespace {

std::string frac(const Cell& c) { return std::to_string(c.accepted) + "/" + std::to_string(c.total); }

void write_numeric(std::ostream& out, const Cell& c) {
  char buf[32];
  const double ratio = c.total == 0 ? 0.0 : static_cast<double>(c.accepted) / static_cast<double>(c.total);
  std::snprintf(buf, sizeof buf, "%.4f", ratio);
  out << ',' << c.accepted << ',' << c.total << ',' << buf << '\n';
}

}  // namespace

void AnswerabilityReport::write_csv(std::ostream& out) const {
  out << "topic";
  for (const auto t : corpus::kAllTypes) out << ',' << corpus::type_name(t);
  out << ",All,accepted,total,ratio\n";
  for (std::size_t r = 0; r < corpus::kTopicCount; ++r) {
    out << csv::escape(corpus::topic_name(static_cast<corpus::Topic>(r)));
    for (std::size_t c = 0; c < corpus::kTypeCount; ++c) out << ',' << frac(cells[r][c]);
    out << ',' << frac(topic_totals[r]);
    write_numeric(out, topic_totals[r]);
  }
  out << "All";
  for (std::size_t c = 0; c < corpus::kTypeCount; ++c) out << ',' << frac(type_totals[c]);
  out << ',' << frac(overall);
  write_numeric(out, overall);
}

AnswerabilityReport answerability_report(std::span<const AnswerHit> hits,
                                         std::span<const corpus::Question> questions) {
  std::unordered_map<std::string, std::size_t> by_id;
  std::string missing_topic;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    by_id.emplace(questions[i].id, i);
    if (!questions[i].topic) missing_topic += (missing_topic.empty() ? "" : ",") + questions[i].id;
  }
  if (!missing_topic.empty()) throw DomainError("questions without a topic: " + missing_topic);

  std::vector<bool> accepted(questions.size(), false);
  for (const AnswerHit& h : hits) {
    const auto it = by_id.find(h.question_id);
    if (it == by_id.end()) throw DomainError("answer refers to unknown question " + h.question_id);
    if (h.accepted) accepted[it->second] = true;
  }

  AnswerabilityReport rep;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const corpus::Question& q = questions[i];
    const auto t = static_cast<std::size_t>(*q.topic);
    const auto y = static_cast<std::size_t>(q.qtype.value_or(corpus::classify_type(q.norm_text)));
    const std::size_t a = accepted[i] ? 1 : 0;
    for (Cell* c : {&rep.cells[t][y], &rep.topic_totals[t], &rep.type_totals[y], &rep.overall}) {
      c->accepted += a;
      c->total += 1;
    }
  }
  return rep;
}

}  // namespace qurious::answering
