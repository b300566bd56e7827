#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "qurious/analytics.hpp"
#include "qurious/answering.hpp"
#include "qurious/calibration.hpp"
#include "qurious/corpus.hpp"
#include "qurious/csv.hpp"
#include "qurious/embedding.hpp"
#include "qurious/equivalence.hpp"
#include "qurious/error.hpp"
#include "qurious/heads.hpp"
#include "qurious/manifest.hpp"
#include "qurious/simd/kernels.hpp"
#include "qurious/vectorstore.hpp"

namespace qurious::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::vector<corpus::Question> load_questions(const fs::path& path) {
  auto in = open_in(path);
  return corpus::read_questions_jsonl(in);
}

void save_questions(const fs::path& path, const std::vector<corpus::Question>& qs) {
  auto out = open_out(path);
  corpus::write_questions_jsonl(out, qs);
}

corpus::InputFormat parse_format(const std::string& s) {
  if (s == "lines") return corpus::InputFormat::lines;
  if (s == "jsonl") return corpus::InputFormat::jsonl;
  throw DomainError("unknown format: " + s);
}

// --- shared option groups -------------------------------------------------------------

struct EmbedFlags {
  std::string provider = "mock";
  std::string endpoint;
  std::size_t dim = embedding::kDefaultDim;
  std::size_t batch_size = 64;
  std::string source;
  int timeout_ms = 30000;
  CLI::Option* dim_option = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--provider", provider, "Embedding provider")
        ->check(CLI::IsMember({"file", "http", "mock"}))
        ->capture_default_str();
    app->add_option("--endpoint", endpoint,
                    "Embedding service base URL for --provider http (env QURIOUS_ENDPOINT overrides)");
    dim_option = app->add_option("--dim", dim, "Embedding dimension (BERT-base width)")
                     ->check(CLI::PositiveNumber)
                     ->capture_default_str();
    app->add_option("--batch-size", batch_size, "Texts per /embed request")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--source", source, "QEMB file of precomputed rows for --provider file");
    app->add_option("--timeout-ms", timeout_ms, "HTTP timeout per attempt")->capture_default_str();
  }

  embedding::EmbedderConfig config(std::uint64_t seed) const {
    embedding::EmbedderConfig c;
    if (provider == "mock") c.provider = embedding::Provider::mock;
    if (provider == "file") c.provider = embedding::Provider::file;
    if (provider == "http") c.provider = embedding::Provider::http;
    std::string ep = endpoint;
    if (const char* env = std::getenv("QURIOUS_ENDPOINT"); env && *env) ep = env;
    if (c.provider == embedding::Provider::http && !ep.empty()) c.endpoint = ep;
    c.dim = dim;
    c.seed = seed;
    c.batch_size = batch_size;
    if (!source.empty()) c.source = source;
    c.timeout = std::chrono::milliseconds(timeout_ms);
    return c;
  }

  json snapshot() const {
    json j = {{"provider", provider}, {"dim", dim}, {"batch_size", batch_size}};
    if (provider == "http") j["endpoint_set"] = true;
    if (!source.empty()) j["source"] = source;
    return j;
  }
};

struct Context {
  std::uint64_t seed = 0;
  std::string manifest_path;
};

using Handler = std::function<void(RunManifest&)>;

// --- subcommands ---------------------------------------------------------------------

void add_ingest(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("ingest", "Parse a question corpus, drop duplicates and short questions");
  struct Opts {
    std::string input, format = "lines", out, removed;
    std::size_t min_tokens = 3;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--input", o->input, "Corpus file")->required();
  sub->add_option("--format", o->format, "Input format")
      ->check(CLI::IsMember({"lines", "jsonl"}))
      ->capture_default_str();
  sub->add_option("--min-tokens", o->min_tokens, "Shortest question kept, in tokens")->capture_default_str();
  sub->add_option("--out", o->out, "Questions JSONL output")->required();
  sub->add_option("--removed", o->removed, "Removal report CSV (default: <out stem>.removed.csv)");
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      m.config() = {{"format", o->format}, {"min_tokens", o->min_tokens}};
      m.add_input(o->input);
      auto in = open_in(o->input);
      auto parsed = m.time("parse", [&] { return corpus::parse_corpus(in, parse_format(o->format)); });
      const std::size_t total = parsed.size();
      auto filtered = m.time("filter", [&] { return corpus::normalize_and_filter(std::move(parsed), o->min_tokens); });
      save_questions(o->out, filtered.kept);
      fs::path removed = o->removed;
      if (removed.empty()) {
        removed = fs::path(o->out);
        removed.replace_extension(".removed.csv");
      }
      {
        auto out = open_out(removed);
        filtered.removed.write_csv(out);
      }
      m.add_output(o->out);
      m.add_output(removed);
      std::size_t dup = 0;
      for (const auto& r : filtered.removed.removals) dup += r.reason == corpus::RemovalReason::duplicate;
      m.results() = {{"input", total},
                     {"kept", filtered.kept.size()},
                     {"removed", filtered.removed.removals.size()},
                     {"duplicates", dup},
                     {"too_short", filtered.removed.removals.size() - dup}};
    };
  });
  (void)ctx;
}

std::unordered_map<std::string, corpus::Topic> read_topic_csv(const fs::path& path) {
  auto in = open_in(path);
  std::unordered_map<std::string, corpus::Topic> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line, line_no);
    if (f.size() < 2) throw ParseError(line_no, "expected id,topic");
    if (line_no == 1 && f[0] == "id") continue;
    try {
      out[f[0]] = corpus::parse_topic(f[1]);
    } catch (const DomainError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

void add_classify(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("classify-type", "Assign keyword question types and, optionally, topics");
  struct Opts {
    std::string questions, out, topics, topic_head, embeddings;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--questions", o->questions, "Questions JSONL")->required();
  sub->add_option("--out", o->out, "Typed questions JSONL")->required();
  sub->add_option("--topics", o->topics, "CSV id,topic with known topics");
  auto* head = sub->add_option("--topic-head", o->topic_head, "Topic head JSON used to predict topics");
  sub->add_option("--embeddings", o->embeddings, "Question QEMB for --topic-head")->needs(head);
  head->needs(sub->get_option("--embeddings"));
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      (void)ctx;
      m.add_input(o->questions);
      auto qs = load_questions(o->questions);
      m.time("classify", [&] {
        for (auto& q : qs) q.qtype = corpus::classify_type(q.norm_text);
      });
      std::size_t topics_set = 0;
      if (!o->topics.empty()) {
        m.add_input(o->topics);
        const auto topics = read_topic_csv(o->topics);
        for (auto& q : qs) {
          if (const auto it = topics.find(q.id); it != topics.end()) q.topic = it->second;
        }
      }
      if (!o->topic_head.empty()) {
        m.add_input(o->topic_head);
        m.add_input(o->embeddings);
        const auto head = heads::load_head(fs::path(o->topic_head));
        const auto emb = embedding::load_embeddings(o->embeddings);
        m.time("predict_topic", [&] {
          for (auto& q : qs) {
            if (q.topic) continue;
            const auto row = emb.find(q.id);
            if (!row) throw DomainError("no embedding for question " + q.id);
            q.topic = corpus::parse_topic(heads::predict_topic(head, emb.row(*row)).label);
          }
        });
      }
      json counts = json::object();
      for (const auto t : corpus::kAllTypes) counts[std::string(corpus::type_name(t))] = 0;
      for (const auto& q : qs) {
        counts[std::string(corpus::type_name(*q.qtype))] = counts[std::string(corpus::type_name(*q.qtype))].get<int>() + 1;
        topics_set += q.topic.has_value();
      }
      save_questions(o->out, qs);
      m.add_output(o->out);
      m.results() = {{"questions", qs.size()}, {"type_counts", counts}, {"with_topic", topics_set}};
    };
  });
}

void add_train_topic(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("train-topic", "Train a softmax topic head on frozen question embeddings");
  struct Opts {
    std::string questions, embeddings, out;
    heads::TrainConfig train;
  };
  auto o = std::make_shared<Opts>();
  o->train.learning_rate = 0.1;
  o->train.epochs = 200;
  sub->add_option("--questions", o->questions, "Questions JSONL with topics")->required();
  sub->add_option("--embeddings", o->embeddings, "Question QEMB")->required();
  sub->add_option("--out", o->out, "Head JSON output")->required();
  sub->add_option("--learning-rate", o->train.learning_rate, "SGD step size")->capture_default_str();
  sub->add_option("--epochs", o->train.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--train-batch-size", o->train.batch_size, "Mini-batch size")->capture_default_str();
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      o->train.seed = ctx.seed;
      m.add_input(o->questions);
      m.add_input(o->embeddings);
      const auto qs = load_questions(o->questions);
      const auto emb = embedding::load_embeddings(o->embeddings);
      std::vector<heads::Vector> x;
      std::vector<int> y;
      for (const auto& q : qs) {
        if (!q.topic) continue;
        const auto row = emb.find(q.id);
        if (!row) throw DomainError("no embedding for question " + q.id);
        const auto r = emb.row(*row);
        x.emplace_back(r.begin(), r.end());
        y.push_back(static_cast<int>(*q.topic));
      }
      std::vector<std::string> labels;
      for (std::size_t t = 0; t < corpus::kTopicCount; ++t) {
        labels.emplace_back(corpus::topic_name(static_cast<corpus::Topic>(t)));
      }
      const auto result = m.time("train", [&] { return heads::train_head(x, y, labels, o->train); });
      heads::save_head(result.head, fs::path(o->out));
      m.add_output(o->out);
      m.config() = {{"learning_rate", o->train.learning_rate},
                    {"epochs", o->train.epochs},
                    {"batch_size", o->train.batch_size}};
      m.results() = {{"examples", x.size()},
                     {"final_loss", result.loss_trace.empty() ? 0.0 : result.loss_trace.back()}};
    };
  });
}

void add_embed(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("embed", "Embed questions or knowledge-base sentences into a QEMB file");
  struct Opts {
    std::string questions, sentences, out;
    EmbedFlags flags;
  };
  auto o = std::make_shared<Opts>();
  auto* q = sub->add_option("--questions", o->questions, "Questions JSONL");
  auto* s = sub->add_option("--sentences", o->sentences, "Sentence JSONL {sid,text,title}");
  q->excludes(s);
  sub->add_option("--out", o->out, "QEMB output (ids go to <stem>.ids.jsonl)")->required();
  o->flags.attach(sub);
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      if (o->questions.empty() == o->sentences.empty()) {
        throw DomainError("embed needs exactly one of --questions or --sentences");
      }
      m.config() = o->flags.snapshot();
      std::vector<std::string> ids, texts;
      if (!o->questions.empty()) {
        m.add_input(o->questions);
        for (const auto& qq : load_questions(o->questions)) {
          ids.push_back(qq.id);
          texts.push_back(qq.norm_text);
        }
      } else {
        m.add_input(o->sentences);
        auto in = open_in(o->sentences);
        for (auto& ss : answering::read_sentences_jsonl(in)) {
          ids.push_back(std::move(ss.sid));
          texts.push_back(std::move(ss.text));
        }
      }
      auto embedder = embedding::make_embedder(o->flags.config(ctx.seed));
      auto matrix = m.time("embed", [&] { return embedder->embed(ids, texts); });
      embedding::save_embeddings(matrix, o->out);
      m.add_output(o->out);
      m.add_output(embedding::ids_path_for(o->out));
      m.results() = {{"rows", matrix.count()}, {"dim", matrix.dim()}};
    };
  });
}

void add_index(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("index", "Build an IVF index over embeddings, or a full knowledge base from sentences");
  struct Opts {
    std::string embeddings, sentences, out;
    std::size_t ncells = 0;
    EmbedFlags flags;
  };
  auto o = std::make_shared<Opts>();
  auto* e = sub->add_option("--embeddings", o->embeddings, "QEMB to index");
  auto* s = sub->add_option("--sentences", o->sentences, "Sentence JSONL to embed and index as a knowledge base");
  e->excludes(s);
  sub->add_option("--out", o->out, "QIVF output (default: <embeddings stem>.qivf)");
  sub->add_option("--ncells", o->ncells, "Inverted lists; 0 picks round(sqrt(n))")->capture_default_str();
  o->flags.attach(sub);
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      if (o->embeddings.empty() == o->sentences.empty()) {
        throw DomainError("index needs exactly one of --embeddings or --sentences");
      }
      m.config() = {{"ncells", o->ncells}, {"simd", std::string(simd::isa_name(simd::kernels().isa))}};
      if (!o->sentences.empty()) {
        if (o->out.empty()) throw DomainError("index --sentences needs --out");
        m.config()["embedder"] = o->flags.snapshot();
        m.add_input(o->sentences);
        auto in = open_in(o->sentences);
        auto sentences = answering::read_sentences_jsonl(in);
        auto embedder = embedding::make_embedder(o->flags.config(ctx.seed));
        const auto kb = m.time("build_kb", [&] {
          return answering::build_kb(std::move(sentences), *embedder, o->ncells, ctx.seed);
        });
        answering::save_kb(kb, o->out);
        m.add_output(o->out);
        m.add_output(vectorstore::qemb_path_for(o->out));
        m.add_output(embedding::ids_path_for(vectorstore::qemb_path_for(o->out)));
        m.add_output(answering::sentences_path_for(o->out));
        m.results() = {{"sentences", kb.stats.sentences},
                       {"distinct_embeddings", kb.stats.distinct_embeddings},
                       {"duplicate_embeddings", kb.stats.duplicate_embeddings},
                       {"ncells", kb.stats.ncells},
                       {"default_nprobe", kb.index.default_nprobe()}};
        return;
      }
      m.add_input(o->embeddings);
      auto matrix = embedding::load_embeddings(o->embeddings);
      matrix.l2_normalize();
      fs::path out = o->out.empty() ? fs::path(o->embeddings).replace_extension(".qivf") : fs::path(o->out);
      const std::size_t ncells =
          o->ncells == 0 ? vectorstore::default_ncells(matrix.count()) : o->ncells;
      const auto index = m.time("build", [&] { return vectorstore::ivf_build(matrix, ncells, ctx.seed); });
      vectorstore::save_index(index, out);
      m.add_output(out);
      if (vectorstore::qemb_path_for(out) != fs::path(o->embeddings)) {
        embedding::save_embeddings(matrix, vectorstore::qemb_path_for(out));
        m.add_output(vectorstore::qemb_path_for(out));
      }
      std::size_t largest = 0;
      for (std::size_t c = 0; c < index.ncells(); ++c) largest = std::max(largest, index.list(c).size());
      m.results() = {{"rows", index.count()},
                     {"ncells", index.ncells()},
                     {"default_nprobe", index.default_nprobe()},
                     {"largest_list", largest}};
    };
  });
}

void add_calibrate(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("calibrate", "Sweep similarity thresholds over labelled scores and select one");
  struct Opts {
    std::string scores, criterion = "best-accuracy", out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--scores", o->scores, "CSV with score and label columns (e.g. a labelled pairs CSV)")->required();
  sub->add_option("--criterion", o->criterion,
                  "best-accuracy (equivalence), best-precision (answer pairs), mean-positive (answer retrieval)")
      ->check(CLI::IsMember({"best-accuracy", "best-precision", "mean-positive"}))
      ->capture_default_str();
  sub->add_option("--out", o->out, "Curve CSV output");
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      (void)ctx;
      m.add_input(o->scores);
      auto in = open_in(o->scores);
      std::string line;
      if (!std::getline(in, line)) throw ParseError(1, "empty scores file");
      const auto header = csv::split(line, 1);
      const auto col = [&](const char* name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError(1, std::string("missing column ") + name);
        return static_cast<std::size_t>(it - header.begin());
      };
      const std::size_t cs = col("score"), cl = col("label");
      std::vector<double> scores;
      std::vector<int> labels;
      std::size_t line_no = 1;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split(line, line_no);
        if (f.size() != header.size()) throw ParseError(line_no, "wrong number of CSV fields");
        if (f[cl].empty()) continue;
        if (f[cl] != "0" && f[cl] != "1") throw ParseError(line_no, "label must be 0 or 1");
        try {
          std::size_t used = 0;
          scores.push_back(std::stod(f[cs], &used));
          if (used != f[cs].size()) throw std::invalid_argument("trailing");
        } catch (const std::logic_error&) {
          throw ParseError(line_no, "bad score '" + f[cs] + "'");
        }
        labels.push_back(f[cl][0] - '0');
      }
      const auto criterion = calibration::parse_criterion(o->criterion);
      auto curve = m.time("sweep", [&] { return calibration::threshold_sweep(scores, labels); });
      const double tau = calibration::select_threshold(curve, scores, labels, criterion);
      if (!o->out.empty()) {
        auto out = open_out(o->out);
        curve.write_csv(out);
        out.close();
        m.add_output(o->out);
      }
      const auto it = std::find_if(curve.points.begin(), curve.points.end(),
                                   [&](const auto& p) { return p.threshold == tau; });
      json sel = {{"criterion", std::string(calibration::criterion_name(criterion))}, {"tau", tau}};
      if (it != curve.points.end()) {
        sel["accuracy"] = it->accuracy;
        sel["precision"] = it->precision;
        sel["recall"] = it->recall;
      }
      m.config() = {{"criterion", o->criterion}};
      m.results() = {{"pairs", scores.size()}, {"points", curve.points.size()}, {"selected", sel}};
    };
  });
}

void add_pairs(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("pairs", "Generate candidate equivalent-question pairs for labelling");
  struct Opts {
    std::string embeddings, questions, out;
    std::size_t topn = 10;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--embeddings", o->embeddings, "Question QEMB")->required();
  sub->add_option("--questions", o->questions, "Questions JSONL (for the text columns)");
  sub->add_option("--topn", o->topn, "Nearest neighbours per question")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--out", o->out, "Pairs CSV output")->required();
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      (void)ctx;
      m.config() = {{"topn", o->topn}};
      m.add_input(o->embeddings);
      auto matrix = embedding::load_embeddings(o->embeddings);
      matrix.l2_normalize();
      std::unordered_map<std::string, std::string> texts;
      if (!o->questions.empty()) {
        m.add_input(o->questions);
        for (const auto& q : load_questions(o->questions)) texts.emplace(q.id, q.norm_text);
      }
      const auto pairs = m.time("pairs", [&] { return equivalence::candidate_pairs(matrix, o->topn); });
      auto out = open_out(o->out);
      equivalence::write_pairs_csv(out, pairs, texts);
      out.close();
      m.add_output(o->out);
      m.results() = {{"questions", matrix.count()}, {"pairs", pairs.size()}};
    };
  });
}

void add_cluster(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("cluster", "Group equivalent questions by greedy modularity on the similarity graph");
  struct Opts {
    std::string embeddings, out;
    double tau = calibration::defaults::kTauQe;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--embeddings", o->embeddings, "Question QEMB")->required();
  sub->add_option("--tau", o->tau,
                  "Edge threshold on cosine similarity (0.825: best-accuracy equivalence threshold of the generalist model)")
      ->capture_default_str();
  sub->add_option("--out", o->out, "Partition JSONL output")->required();
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      (void)ctx;
      m.config() = {{"tau", o->tau}};
      m.add_input(o->embeddings);
      auto matrix = embedding::load_embeddings(o->embeddings);
      matrix.l2_normalize();
      const auto graph = m.time("graph", [&] { return equivalence::build_similarity_graph(matrix, o->tau); });
      const auto part = m.time("communities", [&] { return equivalence::detect_communities(graph); });
      auto out = open_out(o->out);
      equivalence::write_partition_jsonl(out, graph, part);
      out.close();
      m.add_output(o->out);
      m.results() = {{"nodes", graph.node_count()},
                     {"edges", graph.edge_count()},
                     {"communities", part.community_count},
                     {"singletons", part.singleton_count},
                     {"modularity", part.modularity}};
    };
  });
}

void add_answer(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("answer", "Retrieve the best knowledge-base sentence for each question");
  struct Opts {
    std::string kb, questions, out;
    double tau = calibration::defaults::kTauQa;
    std::size_t k = 1, nprobe = 0;
    bool accepted_only = false;
    EmbedFlags flags;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--kb", o->kb, "Knowledge-base QIVF (companions share its stem)")->required();
  sub->add_option("--questions", o->questions, "Questions JSONL")->required();
  sub->add_option("--tau-qa,--tau", o->tau,
                  "Acceptance threshold (0.688: mean similarity of correct answers in WikiQA retrieval)")
      ->capture_default_str();
  sub->add_option("--k", o->k, "Sentences reported per question")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--nprobe", o->nprobe, "Cells probed; 0 uses the index default")->capture_default_str();
  sub->add_flag("--accepted-only", o->accepted_only, "Only write answers that clear the threshold");
  sub->add_option("--out", o->out, "Answers CSV output")->required();
  o->flags.attach(sub);
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      m.add_input(o->kb);
      m.add_input(o->questions);
      const auto kb = m.time("load_kb", [&] { return answering::load_kb(o->kb); });
      EmbedFlags flags = o->flags;
      if (flags.dim_option->count() == 0) flags.dim = kb.embeddings.dim();
      m.config() = {{"tau_qa", o->tau}, {"k", o->k}, {"nprobe", o->nprobe}, {"embedder", flags.snapshot()}};
      const auto qs = load_questions(o->questions);
      auto embedder = embedding::make_embedder(flags.config(ctx.seed));
      answering::AnswerOptions opts{o->tau, o->k, o->nprobe};
      std::vector<answering::AnswerHit> hits;
      m.time("answer", [&] {
        std::vector<std::string> ids, texts;
        for (const auto& q : qs) {
          ids.push_back(q.id);
          texts.push_back(q.norm_text);
        }
        auto qemb = embedder->embed(ids, texts);
        qemb.l2_normalize();
        for (std::size_t i = 0; i < qs.size(); ++i) {
          for (auto& h : answering::answer_topk(qs[i].id, qemb.row(i), kb, opts)) {
            if (!o->accepted_only || h.accepted) hits.push_back(std::move(h));
          }
        }
      });
      auto out = open_out(o->out);
      answering::write_answers_csv(out, hits);
      out.close();
      m.add_output(o->out);
      std::size_t accepted = 0;
      for (const auto& h : hits) accepted += h.accepted;
      m.results() = {{"questions", qs.size()}, {"rows", hits.size()}, {"accepted", accepted}};
    };
  });
}

void add_report(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("report", "Type x topic contingency, lift, word frequencies and answerability");
  struct Opts {
    std::string questions, answers, out_dir;
    double association = analytics::kDefaultAssociationLift;
    bool stopwords = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--questions", o->questions, "Typed questions JSONL")->required();
  sub->add_option("--answers", o->answers, "Answers CSV from the answer command");
  sub->add_option("--out-dir", o->out_dir, "Directory for report CSVs")->required();
  sub->add_option("--association-lift", o->association, "Lift at or above which a cell is flagged associated")
      ->capture_default_str();
  sub->add_flag("--stopwords", o->stopwords, "Drop common English stopwords from word frequencies");
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      (void)ctx;
      m.config() = {{"association_lift", o->association}, {"stopwords", o->stopwords}};
      m.add_input(o->questions);
      auto qs = load_questions(o->questions);
      for (auto& q : qs) {
        if (!q.qtype) q.qtype = corpus::classify_type(q.norm_text);
      }
      const fs::path dir = o->out_dir;
      fs::create_directories(dir);

      const auto freqs = analytics::word_frequencies(
          qs, o->stopwords ? analytics::default_stopwords() : std::vector<std::string>{});
      {
        auto out = open_out(dir / "frequencies.csv");
        analytics::write_frequencies_csv(out, freqs);
      }
      m.add_output(dir / "frequencies.csv");

      json types = json::object();
      for (const auto t : corpus::kAllTypes) {
        types[std::string(corpus::type_name(t))] =
            std::count_if(qs.begin(), qs.end(), [&](const auto& q) { return q.qtype == t; });
      }
      m.results() = {{"questions", qs.size()}, {"vocab", freqs.size()}, {"type_counts", types}};

      const auto without_topic =
          static_cast<std::size_t>(std::count_if(qs.begin(), qs.end(), [](const auto& q) { return !q.topic; }));
      if (without_topic > 0) {
        m.results()["topic_tables_skipped"] = true;
        m.results()["questions_without_topic"] = without_topic;
        return;
      }
      const auto table = analytics::contingency(qs);
      {
        auto out = open_out(dir / "contingency.csv");
        table.write_csv(out);
      }
      m.add_output(dir / "contingency.csv");
      const auto lifts = analytics::lift_report(table, o->association);
      {
        auto out = open_out(dir / "lift.csv");
        analytics::write_lift_csv(out, lifts, o->association);
      }
      m.add_output(dir / "lift.csv");
      m.results()["associated_cells"] =
          std::count_if(lifts.begin(), lifts.end(), [](const auto& e) { return e.associated; });

      if (!o->answers.empty()) {
        m.add_input(o->answers);
        auto in = open_in(o->answers);
        const auto hits = answering::read_answers_csv(in);
        const auto rep = answering::answerability_report(hits, qs);
        {
          auto out = open_out(dir / "answerability.csv");
          rep.write_csv(out);
        }
        m.add_output(dir / "answerability.csv");
        m.results()["answered"] = rep.overall.accepted;
        m.results()["answerable_ratio"] = rep.overall_ratio();
      }
    };
  });
}

void add_stats(CLI::App& app, Context& ctx, Handler& handler) {
  auto* sub = app.add_subcommand("stats", "Corpus statistics: size, vocabulary, length distribution");
  struct Opts {
    std::string questions, input, format = "lines", out;
    std::size_t top = 20;
  };
  auto o = std::make_shared<Opts>();
  auto* q = sub->add_option("--questions", o->questions, "Questions JSONL");
  auto* i = sub->add_option("--input", o->input, "Raw corpus (parsed with --format, not filtered)");
  q->excludes(i);
  sub->add_option("--format", o->format, "Raw corpus format")->check(CLI::IsMember({"lines", "jsonl"}))->capture_default_str();
  sub->add_option("--top", o->top, "Most frequent tokens listed in the manifest")->capture_default_str();
  sub->add_option("--out", o->out, "Stats JSON output");
  sub->callback([o, &ctx, &handler] {
    handler = [o, &ctx](RunManifest& m) {
      (void)ctx;
      std::vector<corpus::Question> qs;
      if (!o->questions.empty()) {
        m.add_input(o->questions);
        qs = load_questions(o->questions);
      } else if (!o->input.empty()) {
        m.add_input(o->input);
        auto in = open_in(o->input);
        qs = corpus::parse_corpus(in, parse_format(o->format));
      } else {
        throw DomainError("stats needs --questions or --input");
      }
      const auto s = corpus::corpus_stats(qs);
      json top = json::array();
      for (std::size_t k = 0; k < std::min(o->top, s.token_frequencies.size()); ++k) {
        top.push_back({s.token_frequencies[k].first, s.token_frequencies[k].second});
      }
      json j = {{"question_count", s.question_count}, {"vocab_size", s.vocab_size},
                {"min_len", s.min_len},               {"max_len", s.max_len},
                {"mean_len", s.mean_len},             {"pct_within_10", s.pct_within_10},
                {"top_tokens", top}};
      if (!o->out.empty()) {
        auto out = open_out(o->out);
        out << j.dump(2) << '\n';
        out.close();
        m.add_output(o->out);
      }
      m.results() = j;
    };
  });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"qurious: question-corpus analysis and semantic retrieval"};
  app.require_subcommand(1);
  Context ctx;
  app.add_option("--seed", ctx.seed, "Seed for mock embeddings, k-means and training shuffles")->capture_default_str();
  app.add_option("--manifest", ctx.manifest_path, "Write the run manifest here instead of stdout");
  app.fallthrough();

  Handler handler;
  add_ingest(app, ctx, handler);
  add_classify(app, ctx, handler);
  add_train_topic(app, ctx, handler);
  add_embed(app, ctx, handler);
  add_index(app, ctx, handler);
  add_calibrate(app, ctx, handler);
  add_pairs(app, ctx, handler);
  add_cluster(app, ctx, handler);
  add_answer(app, ctx, handler);
  add_report(app, ctx, handler);
  add_stats(app, ctx, handler);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return kExitUser;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunManifest manifest(command);
    manifest.set_seed(ctx.seed);
    handler(manifest);
    const std::string text = manifest.to_json().dump(2) + "\n";
    if (ctx.manifest_path.empty()) {
      out << text;
    } else {
      auto f = open_out(ctx.manifest_path);
      f << text;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << command << ": " << msg << '\n';
    return kExitUser;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << command << ": " << e.what() << '\n';
    return kExitUser;
  } catch (const std::exception& e) {
    err << "internal error: " << command << ": " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace qurious::cli
