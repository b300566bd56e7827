#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qurious/embedding.hpp"

namespace qurious::equivalence {

using embedding::EmbeddingMatrix;

struct CandidatePair {
  std::string qid1;  // qid1 < qid2
  std::string qid2;
  float score = 0.0f;
  std::optional<int> label;

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

/// Each row's topn nearest other rows, as unordered pairs with mirror
/// duplicates collapsed; sorted by score descending, then (qid1, qid2).
/// Throws DomainError on an empty matrix or topn == 0.
std::vector<CandidatePair> candidate_pairs(const EmbeddingMatrix& matrix, std::size_t topn = 10);

/// Pairs CSV: qid1,question1,qid2,question2,score,label (label empty when
/// unlabelled). `texts` maps ids to question text.
void write_pairs_csv(std::ostream& out, std::span<const CandidatePair> pairs,
                     const std::unordered_map<std::string, std::string>& texts);
/// Reads a pairs CSV by header names (qid1, qid2, score, label).
std::vector<CandidatePair> read_pairs_csv(std::istream& in);

/// Simple undirected graph over named nodes.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::vector<std::string> ids);
  explicit Graph(std::size_t n);

  std::size_t node_count() const noexcept { return adj_.size(); }
  std::size_t edge_count() const noexcept { return edges_; }
  const std::string& id(std::size_t node) const noexcept { return ids_[node]; }
  const std::vector<std::uint32_t>& neighbors(std::size_t node) const noexcept { return adj_[node]; }
  std::size_t degree(std::size_t node) const noexcept { return adj_[node].size(); }

  /// Ignores self-loops and repeated edges. Returns true if added.
  bool add_edge(std::size_t a, std::size_t b);
  bool has_edge(std::size_t a, std::size_t b) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<std::uint32_t>> adj_;  // sorted
  std::size_t edges_ = 0;
};

/// Edge (i, j) iff cos(i, j) >= tau, i.e. cosine distance <= 1 - tau.
/// Throws DomainError unless tau is in (0, 1].
Graph build_similarity_graph(const EmbeddingMatrix& matrix, double tau);

struct CommunityPartition {
  std::vector<std::size_t> assignment;  // node -> community, numbered by first member
  std::size_t community_count = 0;
  std::size_t singleton_count = 0;
  double modularity = 0.0;
};

/// Q = sum_c (e_c / m - (d_c / 2m)^2); 0 for an edgeless graph.
/// Throws DomainError if the assignment does not cover every node.
double modularity(const Graph& graph, std::span<const std::size_t> assignment);

/// Clauset-Newman-Moore greedy agglomeration: start from singletons and
/// merge the connected pair with the largest modularity gain until no gain
/// is positive. Gains are compared exactly (integer arithmetic); ties go to
/// the smallest (community, community) pair.
CommunityPartition detect_communities(const Graph& graph);

/// JSONL {"id": ..., "community": ...} per node.
void write_partition_jsonl(std::ostream& out, const Graph& graph, const CommunityPartition& p);

}  // namespace qurious::equivalence
