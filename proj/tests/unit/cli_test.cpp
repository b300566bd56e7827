#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"
#include "qurious/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "qurious");
  std::ostringstream out, err;
  const int code = qurious::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// ingest -> classify -> embed -> index -> pairs -> cluster -> report into dir.
void pipeline(const fs::path& dir) {
  const std::string d = dir.string();
  const std::vector<std::vector<std::string>> steps{
      {"ingest", "--input", fixtures::data_path("mini_corpus.txt").string(), "--format", "lines", "--min-tokens", "3",
       "--out", d + "/questions.jsonl"},
      {"classify-type", "--questions", d + "/questions.jsonl", "--topics", fixtures::data_path("mini_topics.csv").string(),
       "--out", d + "/typed.jsonl"},
      {"embed", "--questions", d + "/typed.jsonl", "--provider", "mock", "--dim", "64", "--out", d + "/q.qemb"},
      {"index", "--embeddings", d + "/q.qemb", "--out", d + "/q.qivf"},
      {"pairs", "--embeddings", d + "/q.qemb", "--questions", d + "/typed.jsonl", "--topn", "3", "--out", d + "/pairs.csv"},
      {"cluster", "--embeddings", d + "/q.qemb", "--tau", "0.25", "--out", d + "/partition.jsonl"},
      {"report", "--questions", d + "/typed.jsonl", "--out-dir", d + "/report"},
  };
  for (auto args : steps) {
    const std::string name = args[0];
    args.insert(args.end(), {"--seed", "7", "--manifest", d + "/" + name + ".manifest.json"});
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << name << ": " << r.err;
  }
}

}  // namespace

TEST(Cli, IngestCountsAndManifest) {
  const auto dir = fixtures::temp_dir("cli-ingest");
  const auto r = run({"ingest", "--input", fixtures::data_path("mini_corpus.txt").string(), "--format", "lines",
                      "--min-tokens", "3", "--out", (dir / "q.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = json::parse(r.out);
  EXPECT_EQ(m["command"], "ingest");
  EXPECT_EQ(m["results"]["kept"], 35);
  EXPECT_EQ(m["results"]["removed"], 5);
  EXPECT_EQ(m["outputs"].size(), 2u);
  EXPECT_EQ(m["inputs"][0]["digest"], qurious::file_digest(fixtures::data_path("mini_corpus.txt")));
  EXPECT_EQ(count_lines(slurp(dir / "q.jsonl")), 35u);
  EXPECT_EQ(count_lines(slurp(dir / "q.removed.csv")), 6u);
}

TEST(Cli, PipelineIsDeterministic) {
  const auto a = fixtures::temp_dir("cli-a"), b = fixtures::temp_dir("cli-b");
  pipeline(a);
  pipeline(b);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    if (rel.string().ends_with(".manifest.json")) {
      auto ma = json::parse(slurp(entry.path())), mb = json::parse(slurp(b / rel));
      for (auto* m : {&ma, &mb}) {
        m->erase("timings_ms");
        for (auto& io : (*m)["inputs"]) io.erase("path");
        for (auto& io : (*m)["outputs"]) io.erase("path");
      }
      EXPECT_EQ(ma, mb) << rel;
    } else {
      EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
    }
    ++compared;
  }
  EXPECT_GE(compared, 14u);
  EXPECT_TRUE(fs::exists(a / "report" / "contingency.csv"));
  EXPECT_TRUE(fs::exists(a / "report" / "lift.csv"));
  EXPECT_TRUE(fs::exists(a / "report" / "frequencies.csv"));
}

TEST(Cli, AnswerWritesAcceptedColumn) {
  const auto dir = fixtures::temp_dir("cli-answer");
  const std::string d = dir.string();
  ASSERT_EQ(run({"ingest", "--input", fixtures::data_path("mini_corpus.txt").string(), "--out", d + "/q.jsonl"}).code, 0);
  ASSERT_EQ(run({"classify-type", "--questions", d + "/q.jsonl", "--topics",
                 fixtures::data_path("mini_topics.csv").string(), "--out", d + "/t.jsonl"})
                .code,
            0);
  auto r = run({"index", "--sentences", fixtures::data_path("mini_kb.jsonl").string(), "--dim", "128", "--out",
                d + "/kb.qivf", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"answer", "--tau", "0.688", "--kb", d + "/kb.qivf", "--questions", d + "/t.jsonl", "--out",
           d + "/answers.csv", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(dir / "answers.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "question_id,sid,score,accepted,answer");
  EXPECT_EQ(count_lines(csv), 36u);
  // The KB holds two of the questions verbatim.
  EXPECT_EQ(json::parse(r.out)["results"]["accepted"], 2);

  r = run({"report", "--questions", d + "/t.jsonl", "--answers", d + "/answers.csv", "--out-dir", d + "/rep"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["results"]["answered"], 2);
  EXPECT_TRUE(fs::exists(dir / "rep" / "answerability.csv"));
}

TEST(Cli, CalibrateSelectsThreshold) {
  const auto dir = fixtures::temp_dir("cli-cal");
  {
    std::ofstream f(dir / "scores.csv");
    f << "qid1,qid2,score,label\na,b,0.700,1\nc,d,0.676,1\ne,f,0.2,0\ng,h,0.5,\n";
  }
  const auto r = run({"calibrate", "--scores", (dir / "scores.csv").string(), "--criterion", "mean-positive", "--out",
                      (dir / "curve.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = json::parse(r.out);
  EXPECT_EQ(m["results"]["selected"]["tau"].get<double>(), 0.688);
  EXPECT_EQ(m["results"]["pairs"], 3);
  EXPECT_EQ(slurp(dir / "curve.csv").substr(0, 35), "threshold,accuracy,precision,recall");
}

TEST(Cli, StatsOnRawCorpus) {
  const auto r = run({"stats", "--input", fixtures::data_path("mini_corpus.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["results"]["question_count"], 40);
}

TEST(Cli, UserErrorsExitOneWithOneLine) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"ingest", "--bogus"},
           {"ingest", "--input", "/nonexistent/file.txt", "--out", "/tmp/x.jsonl"},
           {"frobnicate"},
           {},
           {"embed", "--questions", "/nonexistent.jsonl", "--provider", "carrier-pigeon", "--out", "x.qemb"},
       }) {
    const auto r = run(args);
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(count_lines(r.err), 1u) << r.err;
    EXPECT_TRUE(r.out.empty());
  }
}

TEST(Cli, FormatErrorExitsOne) {
  const auto dir = fixtures::temp_dir("cli-bad");
  {
    std::ofstream f(dir / "bad.jsonl");
    f << "{\"id\":\"a\",\"text\":\"ok then fine\"}\n{broken\n";
  }
  const auto r = run({"ingest", "--input", (dir / "bad.jsonl").string(), "--format", "jsonl", "--out",
                      (dir / "q.jsonl").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(count_lines(r.err), 1u);
}

TEST(Cli, HelpShowsDefaults) {
  const auto r = run({"answer", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0.688"), std::string::npos);
  const auto c = run({"cluster", "--help"});
  EXPECT_NE(c.out.find("0.825"), std::string::npos);
}

TEST(Cli, EndpointFromEnvironmentNeedsServer) {
  const auto dir = fixtures::temp_dir("cli-http");
  ASSERT_EQ(run({"ingest", "--input", fixtures::data_path("mini_corpus.txt").string(), "--out",
                 (dir / "q.jsonl").string()})
                .code,
            0);
  ::setenv("QURIOUS_ENDPOINT", "http://127.0.0.1:1", 1);
  const auto r = run({"embed", "--questions", (dir / "q.jsonl").string(), "--provider", "http", "--endpoint",
                      "http://example.invalid", "--out", (dir / "q.qemb").string()});
  ::unsetenv("QURIOUS_ENDPOINT");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("attempts"), std::string::npos) << r.err;
}
