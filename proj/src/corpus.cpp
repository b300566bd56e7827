#include "qurious/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "qurious/error.hpp"
#include "qurious/text.hpp"

namespace qurious::corpus {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kTypeCount> kTypeNames{
    "how", "what", "when", "where", "which", "who", "why", "if", "other"};

constexpr std::array<std::string_view, kTopicCount> kTopicNames{
    "Business & Finance",     "Computers & Internet",  "Education & Reference",
    "Entertainment & Music",  "Family & Relationships", "Health",
    "Politics & Government",  "Science & Mathematics", "Society & Culture",
    "Sports"};

// "Science & Mathematics", "science and mathematics", "SCIENCE_AND_MATHEMATICS"
// all reduce to "scienceandmathematics".
std::string topic_key(std::string_view name) {
  std::string out;
  for (const char c : name) {
    if (c == '&') {
      out += "and";
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      out.push_back(c);
    } else if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    }
  }
  return out;
}

std::string auto_id(std::size_t ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "q%04zu", ordinal);
  return buf;
}

Question make_question(std::string id, std::string raw) {
  Question q;
  q.id = std::move(id);
  q.norm_text = text::collapse_whitespace(raw);
  q.raw_text = std::move(raw);
  q.token_count = text::tokenize(q.norm_text).size();
  return q;
}

std::vector<std::string_view> split_lines(std::string_view data) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < data.size()) {
    std::size_t end = data.find('\n', start);
    if (end == std::string_view::npos) end = data.size();
    std::string_view line = data.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string_view type_name(QType t) noexcept { return kTypeNames[static_cast<std::size_t>(t)]; }

QType parse_type(std::string_view name) {
  const std::string folded = text::casefold(name);
  for (std::size_t i = 0; i < kTypeCount; ++i) {
    if (folded == kTypeNames[i]) return static_cast<QType>(i);
  }
  throw DomainError("unknown question type: " + std::string(name));
}

std::string_view topic_name(Topic t) noexcept { return kTopicNames[static_cast<std::size_t>(t)]; }

Topic parse_topic(std::string_view name) {
  const std::string key = topic_key(name);
  for (std::size_t i = 0; i < kTopicCount; ++i) {
    if (key == topic_key(kTopicNames[i])) return static_cast<Topic>(i);
  }
  throw DomainError("unknown topic: " + std::string(name));
}

std::vector<Question> parse_corpus(std::string_view data, InputFormat format) {
  std::vector<Question> out;
  std::unordered_set<std::string> seen;
  const auto lines = split_lines(data);
  std::size_t ordinal = 0;

  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::size_t line_no = ln + 1;
    const std::string_view line = lines[ln];
    if (!text::valid_utf8(line)) throw ParseError(line_no, "invalid UTF-8");
    if (text::collapse_whitespace(line).empty()) continue;

    if (format == InputFormat::lines) {
      ++ordinal;
      Question q = make_question(auto_id(ordinal), std::string(line));
      if (!seen.insert(q.id).second) throw ParseError(line_no, "duplicate id " + q.id);
      out.push_back(std::move(q));
      continue;
    }

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError(line_no, "record is not a JSON object");
    const auto text_it = rec.find("text");
    if (text_it == rec.end() || !text_it->is_string()) {
      throw ParseError(line_no, "missing string field \"text\"");
    }
    const std::string raw = text_it->get<std::string>();
    if (text::collapse_whitespace(raw).empty()) continue;
    ++ordinal;

    std::string id;
    if (const auto it = rec.find("id"); it != rec.end() && !it->is_null()) {
      if (it->is_string()) {
        id = it->get<std::string>();
      } else if (it->is_number_integer()) {
        id = std::to_string(it->get<long long>());
      } else {
        throw ParseError(line_no, "field \"id\" must be a string or integer");
      }
    } else {
      id = auto_id(ordinal);
    }
    if (id.empty()) throw ParseError(line_no, "empty id");
    if (!seen.insert(id).second) throw ParseError(line_no, "duplicate id " + id);

    Question q = make_question(std::move(id), raw);
    try {
      if (const auto it = rec.find("source"); it != rec.end() && it->is_string()) {
        q.source_tag = it->get<std::string>();
      }
      if (const auto it = rec.find("topic"); it != rec.end() && it->is_string()) {
        q.topic = parse_topic(it->get<std::string>());
      }
      if (const auto it = rec.find("type"); it != rec.end() && it->is_string()) {
        q.qtype = parse_type(it->get<std::string>());
      }
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Question> parse_corpus(std::istream& in, InputFormat format) {
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_corpus(std::string_view(data), format);
}

std::string_view reason_name(RemovalReason r) noexcept {
  return r == RemovalReason::duplicate ? "duplicate" : "too_short";
}

void RemovalReport::write_csv(std::ostream& out) const {
  out << "id,reason\n";
  for (const Removal& r : removals) out << r.id << ',' << reason_name(r.reason) << '\n';
}

FilterResult normalize_and_filter(std::vector<Question> questions, std::size_t min_tokens) {
  FilterResult result;
  std::unordered_set<std::string> seen;
  for (Question& q : questions) {
    if (!seen.insert(text::casefold(q.norm_text)).second) {
      result.removed.removals.push_back({q.id, RemovalReason::duplicate});
    } else if (q.token_count < min_tokens) {
      result.removed.removals.push_back({q.id, RemovalReason::too_short});
    } else {
      result.kept.push_back(std::move(q));
    }
  }
  return result;
}

QType classify_type(std::string_view norm_text) {
  static const std::unordered_map<std::string_view, QType> keywords{
      {"how", QType::HOW},     {"what", QType::WHAT}, {"when", QType::WHEN},
      {"where", QType::WHERE}, {"which", QType::WHICH}, {"who", QType::WHO},
      {"why", QType::WHY}};
  std::optional<QType> first;
  for (const std::string& tok : text::tokenize(norm_text)) {
    if (tok == "if") return QType::IF;
    if (!first) {
      if (const auto it = keywords.find(tok); it != keywords.end()) first = it->second;
    }
  }
  return first.value_or(QType::OTHER);
}

std::vector<std::pair<std::string, std::size_t>> token_frequencies(
    std::span<const Question> questions, const std::vector<std::string>& stopwords) {
  std::unordered_set<std::string> stop;
  for (const std::string& w : stopwords) stop.insert(text::casefold(w));
  std::unordered_map<std::string, std::size_t> counts;
  for (const Question& q : questions) {
    for (std::string& tok : text::tokenize(q.norm_text)) {
      if (!stop.contains(tok)) ++counts[std::move(tok)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

CorpusStats corpus_stats(const std::vector<Question>& questions) {
  CorpusStats s;
  if (questions.empty()) return s;
  s.question_count = questions.size();
  s.min_len = questions.front().token_count;
  std::size_t total = 0;
  std::size_t within = 0;
  for (const Question& q : questions) {
    s.min_len = std::min(s.min_len, q.token_count);
    s.max_len = std::max(s.max_len, q.token_count);
    total += q.token_count;
    if (q.token_count <= 10) ++within;
  }
  s.mean_len = static_cast<double>(total) / static_cast<double>(questions.size());
  s.pct_within_10 = static_cast<double>(within) / static_cast<double>(questions.size());
  s.token_frequencies = token_frequencies(questions);
  s.vocab_size = s.token_frequencies.size();
  return s;
}

void write_questions_jsonl(std::ostream& out, const std::vector<Question>& questions) {
  for (const Question& q : questions) {
    json rec = {{"id", q.id},
                {"text", q.raw_text},
                {"norm_text", q.norm_text},
                {"token_count", q.token_count}};
    if (q.qtype) rec["type"] = type_name(*q.qtype);
    if (q.topic) rec["topic"] = topic_name(*q.topic);
    if (q.source_tag) rec["source"] = *q.source_tag;
    out << rec.dump() << '\n';
  }
}

std::vector<Question> read_questions_jsonl(std::istream& in) {
  return parse_corpus(in, InputFormat::jsonl);
}

}  // namespace qurious::corpus
