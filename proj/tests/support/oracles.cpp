#include "oracles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace oracle {

std::vector<Neighbor> topk(const qurious::embedding::EmbeddingMatrix& m,
                           std::span<const float> query, std::size_t k) {
  std::vector<Neighbor> all;
  all.reserve(m.count());
  for (std::size_t r = 0; r < m.count(); ++r) {
    const auto row = m.row(r);
    double s = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) s += static_cast<double>(row[i]) * query[i];
    all.push_back({r, s});
  }
  std::sort(all.begin(), all.end(), [&](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return a.score > b.score;
    return m.id(a.row) < m.id(b.row);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

double recall(std::span<const std::size_t> approx, std::span<const std::size_t> exact) {
  if (exact.empty()) return 1.0;
  const std::set<std::size_t> truth(exact.begin(), exact.end());
  std::size_t hit = 0;
  for (const auto r : approx) hit += truth.count(r);
  return static_cast<double>(hit) / static_cast<double>(exact.size());
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-8});
}

namespace {

ThresholdPick evaluate(double tau, std::span<const double> scores, std::span<const int> labels) {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= tau;
    if (pred && labels[i] == 1) ++tp;
    if (pred && labels[i] == 0) ++fp;
    if (!pred && labels[i] == 0) ++tn;
    if (!pred && labels[i] == 1) ++fn;
  }
  ThresholdPick p{tau, 0, 0, 0};
  p.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
  p.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  p.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  return p;
}

std::vector<double> distinct(std::span<const double> scores) {
  std::vector<double> c(scores.begin(), scores.end());
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

}  // namespace

ThresholdPick best_accuracy(std::span<const double> scores, std::span<const int> labels) {
  ThresholdPick best{0, -1, 0, 0};
  for (const double tau : distinct(scores)) {
    const auto p = evaluate(tau, scores, labels);
    if (p.accuracy >= best.accuracy) best = p;  // ascending scan: ties move to larger tau
  }
  return best;
}

ThresholdPick best_precision(std::span<const double> scores, std::span<const int> labels) {
  ThresholdPick best{0, 0, -1, -1};
  for (const double tau : distinct(scores)) {
    const auto p = evaluate(tau, scores, labels);
    if (p.precision > best.precision || (p.precision == best.precision && p.recall >= best.recall)) {
      best = p;
    }
  }
  return best;
}

Adjacency adjacency(const qurious::equivalence::Graph& g) {
  Adjacency a(g.node_count(), std::vector<int>(g.node_count(), 0));
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    for (const auto j : g.neighbors(i)) a[i][j] = 1;
  }
  return a;
}

double modularity(const Adjacency& a, std::span<const std::size_t> assignment) {
  const std::size_t n = a.size();
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
    two_m += k[i];
  }
  if (two_m == 0.0) return 0.0;
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (assignment[i] == assignment[j]) q += a[i][j] - k[i] * k[j] / two_m;
    }
  }
  return q / two_m;
}

double max_modularity(const Adjacency& a) {
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  std::vector<std::size_t> rgs(n, 0), maxes(n, 0);
  double best = modularity(a, rgs);
  // Enumerate restricted growth strings: rgs[0] = 0, rgs[i] <= 1 + max(rgs[0..i-1]).
  while (true) {
    std::size_t i = n - 1;
    while (i > 0 && rgs[i] == maxes[i - 1] + 1) --i;
    if (i == 0) break;
    ++rgs[i];
    maxes[i] = std::max(maxes[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      maxes[j] = maxes[i];
    }
    best = std::max(best, modularity(a, rgs));
  }
  return best;
}

namespace {

long long integer_score(const Adjacency& a, const std::vector<std::size_t>& c, long long two_m) {
  const std::size_t n = a.size();
  std::vector<long long> inner(n, 0), degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      degree[c[i]] += a[i][j];
      if (c[i] == c[j]) inner[c[i]] += a[i][j];
    }
  }
  long long s = 0;
  for (std::size_t k = 0; k < n; ++k) s += two_m * inner[k] - degree[k] * degree[k];
  return s;
}

}  // namespace

std::vector<std::size_t> greedy_modularity(const Adjacency& a) {
  const std::size_t n = a.size();
  std::vector<std::size_t> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = i;
  long long two_m = 0;
  for (const auto& row : a)
    for (const int x : row) two_m += x;
  if (two_m == 0) return c;
  long long current = integer_score(a, c, two_m);
  while (true) {
    std::set<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (a[i][j] && c[i] != c[j]) candidates.emplace(std::min(c[i], c[j]), std::max(c[i], c[j]));
    long long best = current;
    std::pair<std::size_t, std::size_t> pick{n, n};
    for (const auto& [x, y] : candidates) {  // ascending, so the first maximum is the smallest pair
      auto trial = c;
      for (auto& v : trial)
        if (v == y) v = x;
      const long long s = integer_score(a, trial, two_m);
      if (s > best) {
        best = s;
        pick = {x, y};
      }
    }
    if (pick.first == n) return c;
    for (auto& v : c)
      if (v == pick.second) v = pick.first;
    current = best;
  }
}

std::string question_type(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  std::string first;
  while (in >> word) {
    std::string w;
    for (const char c : word) {
      if (std::isalpha(static_cast<unsigned char>(c))) w += static_cast<char>(std::tolower(c));
    }
    if (w == "if") return "if";
    if (first.empty() && (w == "how" || w == "what" || w == "when" || w == "where" || w == "which" ||
                          w == "who" || w == "why")) {
      first = w;
    }
  }
  return first.empty() ? "other" : first;
}

}  // namespace oracle
