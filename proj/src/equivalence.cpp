#include "qurious/equivalence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include <json.hpp>

#include "qurious/csv.hpp"
#include "qurious/error.hpp"
#include "qurious/simd/kernels.hpp"
#include "qurious/vectorstore.hpp"

namespace qurious::equivalence {

std::vector<CandidatePair> candidate_pairs(const EmbeddingMatrix& matrix, std::size_t topn) {
  if (matrix.empty()) throw DomainError("candidate_pairs: empty matrix");
  if (topn == 0) throw DomainError("candidate_pairs: topn must be >= 1");

  std::map<std::pair<std::string, std::string>, float> unique;
  for (std::size_t i = 0; i < matrix.count(); ++i) {
    const auto hits = vectorstore::brute_force_topk(matrix, matrix.row(i), topn + 1);
    std::size_t taken = 0;
    for (const auto& h : hits) {
      if (h.row == i) continue;
      if (taken++ == topn) break;
      const std::string& a = matrix.id(i);
      const std::string& b = h.id;
      auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
      const auto [it, inserted] = unique.emplace(std::move(key), h.score);
      if (!inserted) it->second = std::max(it->second, h.score);
    }
  }

  std::vector<CandidatePair> out;
  out.reserve(unique.size());
  for (auto& [key, score] : unique) out.push_back({key.first, key.second, score, std::nullopt});
  std::stable_sort(out.begin(), out.end(),
                   [](const CandidatePair& a, const CandidatePair& b) { return a.score > b.score; });
  return out;
}

void write_pairs_csv(std::ostream& out, std::span<const CandidatePair> pairs,
                     const std::unordered_map<std::string, std::string>& texts) {
  const auto text_of = [&](const std::string& id) -> std::string {
    const auto it = texts.find(id);
    return it == texts.end() ? std::string() : it->second;
  };
  out << "qid1,question1,qid2,question2,score,label\n";
  char buf[32];
  for (const CandidatePair& p : pairs) {
    const auto res = std::to_chars(buf, buf + sizeof buf, p.score);
    out << csv::escape(p.qid1) << ',' << csv::escape(text_of(p.qid1)) << ',' << csv::escape(p.qid2)
        << ',' << csv::escape(text_of(p.qid2)) << ',' << std::string_view(buf, res.ptr - buf) << ',';
    if (p.label) out << *p.label;
    out << '\n';
  }
}

std::vector<CandidatePair> read_pairs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = csv::split(line, 1);
  const auto column = [&](std::string_view name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(1, "pairs CSV lacks column " + std::string(name));
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c1 = column("qid1"), c2 = column("qid2"), cs = column("score"),
                    cl = column("label");
  std::vector<CandidatePair> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line, line_no);
    if (f.size() != header.size()) throw ParseError(line_no, "wrong number of CSV fields");
    CandidatePair p;
    p.qid1 = f[c1];
    p.qid2 = f[c2];
    if (p.qid2 < p.qid1) std::swap(p.qid1, p.qid2);
    const auto r = std::from_chars(f[cs].data(), f[cs].data() + f[cs].size(), p.score);
    if (r.ec != std::errc() || r.ptr != f[cs].data() + f[cs].size() || !std::isfinite(p.score)) {
      throw ParseError(line_no, "bad score '" + f[cs] + "'");
    }
    if (f[cl] == "0" || f[cl] == "1") {
      p.label = f[cl][0] - '0';
    } else if (!f[cl].empty()) {
      throw ParseError(line_no, "label must be 0, 1 or empty");
    }
    out.push_back(std::move(p));
  }
  return out;
}

// --- graph ---------------------------------------------------------------------

Graph::Graph(std::vector<std::string> ids) : ids_(std::move(ids)), adj_(ids_.size()) {}

Graph::Graph(std::size_t n) : adj_(n) {
  ids_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids_.push_back(std::to_string(i));
}

bool Graph::add_edge(std::size_t a, std::size_t b) {
  if (a >= adj_.size() || b >= adj_.size()) throw DomainError("edge endpoint out of range");
  if (a == b || has_edge(a, b)) return false;
  adj_[a].insert(std::upper_bound(adj_[a].begin(), adj_[a].end(), b), static_cast<std::uint32_t>(b));
  adj_[b].insert(std::upper_bound(adj_[b].begin(), adj_[b].end(), a), static_cast<std::uint32_t>(a));
  ++edges_;
  return true;
}

bool Graph::has_edge(std::size_t a, std::size_t b) const {
  return std::binary_search(adj_[a].begin(), adj_[a].end(), static_cast<std::uint32_t>(b));
}

Graph build_similarity_graph(const EmbeddingMatrix& matrix, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw DomainError("similarity threshold must be in (0, 1]");
  Graph g(matrix.ids());
  const std::size_t n = matrix.count();
  const std::size_t dim = matrix.dim();
  std::vector<float> scores(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t rest = n - i - 1;
    simd::dot_rows(matrix.row(i).data(), matrix.data().data() + (i + 1) * dim, rest, dim,
                   scores.data());
    for (std::size_t r = 0; r < rest; ++r) {
      if (static_cast<double>(scores[r]) >= tau) g.add_edge(i, i + 1 + r);
    }
  }
  return g;
}

// --- communities ------------------------------------------------------------------

double modularity(const Graph& graph, std::span<const std::size_t> assignment) {
  const std::size_t n = graph.node_count();
  if (assignment.size() != n) {
    throw DomainError("partition covers " + std::to_string(assignment.size()) + " of " +
                      std::to_string(n) + " nodes");
  }
  const std::size_t m = graph.edge_count();
  if (m == 0) return 0.0;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> per;  // community -> (intra, degree)
  for (std::size_t v = 0; v < n; ++v) {
    auto& [intra, deg] = per[assignment[v]];
    deg += graph.degree(v);
    for (const std::uint32_t u : graph.neighbors(v)) {
      if (u > v && assignment[u] == assignment[v]) ++intra;
    }
  }
  const double two_m = 2.0 * static_cast<double>(m);
  double q = 0.0;
  for (const auto& [c, stats] : per) {
    const double share = static_cast<double>(stats.second) / two_m;
    q += static_cast<double>(stats.first) / static_cast<double>(m) - share * share;
  }
  return q;
}

CommunityPartition detect_communities(const Graph& graph) {
  const std::size_t n = graph.node_count();
  const auto two_m = static_cast<std::int64_t>(2 * graph.edge_count());

  // Community c: degree sum and edge counts to neighbouring communities.
  // The modularity gain of merging i and j is (2m * e_ij - d_i * d_j) / (2m^2),
  // so the integer numerator orders merges exactly.
  std::vector<std::int64_t> degree(n);
  std::vector<std::map<std::size_t, std::int64_t>> links(n);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t v = 0; v < n; ++v) {
    degree[v] = static_cast<std::int64_t>(graph.degree(v));
    members[v] = {v};
    for (const std::uint32_t u : graph.neighbors(v)) links[v][u] = 1;
  }

  using Entry = std::tuple<std::int64_t, std::size_t, std::size_t>;  // (-gain, i, j), i < j
  std::set<Entry> queue;
  const auto gain = [&](std::size_t i, std::size_t j, std::int64_t e) {
    return two_m * e - degree[i] * degree[j];
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, e] : links[i]) {
      if (i < j) queue.emplace(-gain(i, j, e), i, j);
    }
  }

  const auto erase_pair = [&](std::size_t a, std::size_t b, std::int64_t g) {
    queue.erase({-g, std::min(a, b), std::max(a, b)});
  };

  while (!queue.empty()) {
    const auto [neg_gain, i, j] = *queue.begin();
    if (-neg_gain <= 0) break;

    // Drop every queued pair that touches i or j; gains change with d_i.
    for (const auto& [k, e] : links[i]) erase_pair(i, k, gain(i, k, e));
    for (const auto& [k, e] : links[j]) {
      if (k != i) erase_pair(j, k, gain(j, k, e));
    }

    // Merge j into i.
    for (const auto& [k, e] : links[j]) {
      if (k == i) continue;
      links[i][k] += e;
      links[k].erase(j);
      links[k][i] = links[i][k];
    }
    links[i].erase(j);
    links[j].clear();
    degree[i] += degree[j];
    degree[j] = 0;
    members[i].insert(members[i].end(), members[j].begin(), members[j].end());
    members[j].clear();

    for (const auto& [k, e] : links[i]) queue.emplace(-gain(i, k, e), std::min(i, k), std::max(i, k));
  }

  CommunityPartition out;
  out.assignment.assign(n, 0);
  std::vector<std::size_t> root_of(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (const std::size_t v : members[c]) root_of[v] = c;
  }
  // Renumber communities in order of their smallest member.
  std::map<std::size_t, std::size_t> label;
  for (std::size_t v = 0; v < n; ++v) {
    const auto [it, fresh] = label.emplace(root_of[v], label.size());
    out.assignment[v] = it->second;
  }
  out.community_count = label.size();
  for (std::size_t c = 0; c < n; ++c) {
    if (members[c].size() == 1) ++out.singleton_count;
  }
  out.modularity = modularity(graph, out.assignment);
  return out;
}

void write_partition_jsonl(std::ostream& out, const Graph& graph, const CommunityPartition& p) {
  for (std::size_t v = 0; v < graph.node_count(); ++v) {
    out << nlohmann::json{{"id", graph.id(v)}, {"community", p.assignment[v]}}.dump() << '\n';
  }
}

}  // namespace qurious::equivalence
