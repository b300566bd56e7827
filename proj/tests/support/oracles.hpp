#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the code under test except for plain data accessors.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qurious/embedding.hpp"
#include "qurious/equivalence.hpp"

namespace oracle {

struct Neighbor {
  std::size_t row;
  double score;
};

/// Exact top-k by double-accumulated inner product; score desc, then id asc.
std::vector<Neighbor> topk(const qurious::embedding::EmbeddingMatrix& m,
                           std::span<const float> query, std::size_t k);

/// |approx ∩ exact| / |exact|, over row numbers.
double recall(std::span<const std::size_t> approx, std::span<const std::size_t> exact);

/// Central differences of f around x with step h.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h = 1e-4);

/// ||a - n|| / max(||a||, ||n||, 1e-8).
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

struct ThresholdPick {
  double tau;
  double accuracy;
  double precision;
  double recall;
};

/// Tries every distinct score as a threshold (predict score >= tau) and
/// counts the confusion matrix from scratch for each one.
ThresholdPick best_accuracy(std::span<const double> scores, std::span<const int> labels);
ThresholdPick best_precision(std::span<const double> scores, std::span<const int> labels);

/// Dense symmetric adjacency.
using Adjacency = std::vector<std::vector<int>>;

Adjacency adjacency(const qurious::equivalence::Graph& g);

/// Newman modularity straight from the definition
/// Q = 1/2m sum_ij (A_ij - k_i k_j / 2m) [c_i == c_j]; 0 without edges.
double modularity(const Adjacency& a, std::span<const std::size_t> assignment);

/// Best modularity over every set partition (restricted growth strings).
/// Practical up to about 10 nodes.
double max_modularity(const Adjacency& a);

/// Greedy agglomeration done the slow way: every round recomputes the
/// integer score sum_c (2m * 2e_c - d_c^2) for each candidate merge of two
/// edge-connected communities (named by their smallest member), applies the
/// best strictly improving one, ties to the smallest pair. Returns the
/// community of each node, named by smallest member.
std::vector<std::size_t> greedy_modularity(const Adjacency& a);

/// Keyword rule written out independently: any "if" token wins, else the
/// first question word, else "other". Returns the lower-case type name.
std::string question_type(const std::string& text);

}  // namespace oracle
