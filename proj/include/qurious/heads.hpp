#pragma once

// Classification heads and sentence-pair losses over frozen embeddings.
//
// All arithmetic here is double precision: heads are small, and the
// analytic gradients are checked against central differences.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qurious::heads {

using Vector = std::vector<double>;

/// Linear layer followed by softmax: p = softmax(W x + b).
struct SoftmaxHead {
  std::size_t in_dim = 0;
  std::size_t classes = 0;
  std::vector<double> weights;  // classes x in_dim, row-major
  std::vector<double> bias;     // classes
  std::vector<std::string> class_labels;

  /// All-zero head. Throws DomainError if in_dim == 0 or fewer than 2 labels.
  static SoftmaxHead zeros(std::size_t in_dim, std::vector<std::string> class_labels);

  /// W x + b. Throws DomainError on dim mismatch.
  Vector logits(std::span<const double> x) const;

  bool finite() const noexcept;
};

/// (u, v, |u - v|). Throws DomainError on dim mismatch.
Vector pair_features(std::span<const double> u, std::span<const double> v);

/// softmax(W x + b), max-subtracted.
Vector head_forward(const SoftmaxHead& head, std::span<const double> x);

/// Stable softmax of arbitrary logits.
Vector softmax(std::span<const double> logits);

struct ContrastiveConfig {
  double margin = 0.5;
  bool online_mining = true;
  void validate() const;  // margin in (0, 2]
};

struct LabeledPair {
  Vector u;
  Vector v;
  int label = 0;  // 1 similar, 0 different
};

/// Loss value plus gradients with respect to both sides of every pair.
struct PairLoss {
  double loss = 0.0;
  std::vector<Vector> grad_first;   // d loss / d u_i (or a_i)
  std::vector<Vector> grad_second;  // d loss / d v_i (or b_i)
  std::vector<bool> contributing;   // contrastive only: pair entered the mean
};

/// Online contrastive loss on cosine distance D = 1 - cos(u, v).
/// Positives add D^2, negatives max(0, margin - D)^2; the loss is the mean
/// over contributing pairs. With mining on, only hard pairs contribute:
/// positives with D above the smallest negative distance and negatives
/// below the largest positive distance (all pairs when one class is absent).
/// Throws DomainError on an empty batch, dim mismatch, zero vector or a
/// label outside {0, 1}.
PairLoss contrastive_loss(std::span<const LabeledPair> pairs, const ContrastiveConfig& config);

struct MnrConfig {
  double scale = 20.0;
  void validate() const;
};

struct AnchorPair {
  Vector anchor;
  Vector positive;
};

/// Multiple-negatives ranking loss: row i of S = scale * cos(a_i, b_j) is
/// scored by cross-entropy against target i; other b_j act as negatives.
PairLoss mnr_loss(std::span<const AnchorPair> pairs, const MnrConfig& config);

struct CrossEntropy {
  double loss = 0.0;
  std::vector<double> grad_weights;  // same layout as SoftmaxHead::weights
  std::vector<double> grad_bias;
};

/// Mean cross-entropy of the head over (features, labels).
CrossEntropy cross_entropy(const SoftmaxHead& head, std::span<const Vector> features,
                           std::span<const int> labels);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  void validate() const;
};

struct TrainResult {
  SoftmaxHead head;
  std::vector<double> loss_trace;  // mean mini-batch loss per epoch
};

/// Mini-batch SGD from a zero head. Throws DomainError on empty data,
/// mismatched lengths, ragged features or a label outside [0, classes).
TrainResult train_head(std::span<const Vector> features, std::span<const int> labels,
                       std::vector<std::string> class_labels, const TrainConfig& config);

struct Prediction {
  std::size_t index = 0;
  std::string label;
  Vector probabilities;
};

/// Argmax class (ties to the lowest index) and the full distribution.
Prediction predict(const SoftmaxHead& head, std::span<const double> x);

/// predict() restricted to a 10-class topic head; throws DomainError
/// otherwise.
Prediction predict_topic(const SoftmaxHead& head, std::span<const float> embedding);

void save_head(const SoftmaxHead& head, std::ostream& out);
SoftmaxHead load_head(std::istream& in);
void save_head(const SoftmaxHead& head, const std::filesystem::path& path);
SoftmaxHead load_head(const std::filesystem::path& path);

}  // namespace qurious::heads
