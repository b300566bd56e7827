#include "qurious/heads.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "qurious/corpus.hpp"
#include "qurious/error.hpp"
#include "qurious/rng.hpp"

namespace qurious::heads {

using nlohmann::json;

namespace {

void check_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": dim mismatch " + std::to_string(a) + " vs " +
                      std::to_string(b));
  }
}

double dotd(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double logsumexp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (const double x : z) s += std::exp(x - m);
  return m + std::log(s);
}

// cos(u, v) with the pieces its gradient needs.
struct Cosine {
  double value;
  double nu;
  double nv;
};

Cosine cosine(std::span<const double> u, std::span<const double> v, const char* what) {
  check_dims(u.size(), v.size(), what);
  const double nu = std::sqrt(dotd(u, u));
  const double nv = std::sqrt(dotd(v, v));
  if (nu == 0.0 || nv == 0.0) throw DomainError(std::string(what) + ": zero vector");
  return {dotd(u, v) / (nu * nv), nu, nv};
}

// out += scale * d cos(u, v) / d u = scale * (v / (|u||v|) - cos * u / |u|^2)
void add_dcos_du(Vector& out, std::span<const double> u, std::span<const double> v,
                 const Cosine& c, double scale) {
  const double a = scale / (c.nu * c.nv);
  const double b = scale * c.value / (c.nu * c.nu);
  for (std::size_t i = 0; i < u.size(); ++i) out[i] += a * v[i] - b * u[i];
}

}  // namespace

// --- SoftmaxHead --------------------------------------------------------------

SoftmaxHead SoftmaxHead::zeros(std::size_t in_dim, std::vector<std::string> class_labels) {
  if (in_dim == 0) throw DomainError("head in_dim must be > 0");
  if (class_labels.size() < 2) throw DomainError("head needs at least 2 classes");
  SoftmaxHead h;
  h.in_dim = in_dim;
  h.classes = class_labels.size();
  h.weights.assign(h.classes * in_dim, 0.0);
  h.bias.assign(h.classes, 0.0);
  h.class_labels = std::move(class_labels);
  return h;
}

Vector SoftmaxHead::logits(std::span<const double> x) const {
  check_dims(x.size(), in_dim, "head input");
  Vector z(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    z[k] = bias[k] + dotd({weights.data() + k * in_dim, in_dim}, x);
  }
  return z;
}

bool SoftmaxHead::finite() const noexcept {
  const auto ok = [](double x) { return std::isfinite(x); };
  return std::all_of(weights.begin(), weights.end(), ok) && std::all_of(bias.begin(), bias.end(), ok);
}

Vector softmax(std::span<const double> z) {
  Vector p(z.size());
  if (z.empty()) return p;
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - m));
  for (double& x : p) x /= s;
  return p;
}

Vector pair_features(std::span<const double> u, std::span<const double> v) {
  check_dims(u.size(), v.size(), "pair_features");
  const std::size_t d = u.size();
  Vector out(3 * d);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = u[i];
    out[d + i] = v[i];
    out[2 * d + i] = std::abs(u[i] - v[i]);
  }
  return out;
}

Vector head_forward(const SoftmaxHead& head, std::span<const double> x) {
  return softmax(head.logits(x));
}

// --- contrastive ----------------------------------------------------------------

void ContrastiveConfig::validate() const {
  if (!(margin > 0.0 && margin <= 2.0)) throw DomainError("contrastive margin must be in (0, 2]");
}

PairLoss contrastive_loss(std::span<const LabeledPair> pairs, const ContrastiveConfig& config) {
  config.validate();
  if (pairs.empty()) throw DomainError("contrastive_loss: empty batch");

  const std::size_t n = pairs.size();
  std::vector<Cosine> cos(n);
  std::vector<double> dist(n);
  double min_neg = std::numeric_limits<double>::infinity();
  double max_pos = -std::numeric_limits<double>::infinity();
  bool any_pos = false, any_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    const LabeledPair& p = pairs[i];
    if (p.label != 0 && p.label != 1) throw DomainError("contrastive label must be 0 or 1");
    cos[i] = cosine(p.u, p.v, "contrastive_loss");
    dist[i] = 1.0 - cos[i].value;
    if (p.label == 1) {
      any_pos = true;
      max_pos = std::max(max_pos, dist[i]);
    } else {
      any_neg = true;
      min_neg = std::min(min_neg, dist[i]);
    }
  }

  PairLoss out;
  out.contributing.assign(n, true);
  if (config.online_mining && any_pos && any_neg) {
    for (std::size_t i = 0; i < n; ++i) {
      out.contributing[i] = pairs[i].label == 1 ? dist[i] > min_neg : dist[i] < max_pos;
    }
  }
  const auto used = static_cast<std::size_t>(
      std::count(out.contributing.begin(), out.contributing.end(), true));

  out.grad_first.reserve(n);
  out.grad_second.reserve(n);
  for (const LabeledPair& p : pairs) {
    out.grad_first.emplace_back(p.u.size(), 0.0);
    out.grad_second.emplace_back(p.v.size(), 0.0);
  }
  if (used == 0) return out;

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.contributing[i]) continue;
    const double d = dist[i];
    double dl_dd = 0.0;
    if (pairs[i].label == 1) {
      total += d * d;
      dl_dd = 2.0 * d;
    } else {
      const double gap = std::max(0.0, config.margin - d);
      total += gap * gap;
      dl_dd = -2.0 * gap;
    }
    // D = 1 - cos, so dl/dcos = -dl/dD; averaged over contributing pairs.
    const double scale = -dl_dd / static_cast<double>(used);
    if (scale == 0.0) continue;
    add_dcos_du(out.grad_first[i], pairs[i].u, pairs[i].v, cos[i], scale);
    add_dcos_du(out.grad_second[i], pairs[i].v, pairs[i].u, {cos[i].value, cos[i].nv, cos[i].nu},
                scale);
  }
  out.loss = total / static_cast<double>(used);
  return out;
}

// --- multiple negatives ranking ----------------------------------------------------

void MnrConfig::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("MNR scale must be finite and > 0");
}

PairLoss mnr_loss(std::span<const AnchorPair> pairs, const MnrConfig& config) {
  config.validate();
  if (pairs.empty()) throw DomainError("mnr_loss: empty batch");
  const std::size_t n = pairs.size();

  std::vector<std::vector<Cosine>> cos(n, std::vector<Cosine>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cos[i][j] = cosine(pairs[i].anchor, pairs[j].positive, "mnr_loss");
    }
  }

  PairLoss out;
  for (const AnchorPair& p : pairs) {
    out.grad_first.emplace_back(p.anchor.size(), 0.0);
    out.grad_second.emplace_back(p.positive.size(), 0.0);
  }
  double total = 0.0;
  Vector row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[j] = config.scale * cos[i][j].value;
    total += logsumexp(row) - row[i];
    const Vector p = softmax(row);
    for (std::size_t j = 0; j < n; ++j) {
      // d loss / d S_ij, then S_ij = scale * cos(a_i, b_j).
      const double g = (p[j] - (i == j ? 1.0 : 0.0)) / static_cast<double>(n) * config.scale;
      if (g == 0.0) continue;
      const Cosine& c = cos[i][j];
      add_dcos_du(out.grad_first[i], pairs[i].anchor, pairs[j].positive, c, g);
      add_dcos_du(out.grad_second[j], pairs[j].positive, pairs[i].anchor, {c.value, c.nv, c.nu}, g);
    }
  }
  out.loss = total / static_cast<double>(n);
  return out;
}

// --- cross-entropy and training ------------------------------------------------------

CrossEntropy cross_entropy(const SoftmaxHead& head, std::span<const Vector> features,
                           std::span<const int> labels) {
  if (features.empty()) throw DomainError("cross_entropy: empty data");
  if (features.size() != labels.size()) throw DomainError("cross_entropy: features/labels length");
  CrossEntropy out;
  out.grad_weights.assign(head.weights.size(), 0.0);
  out.grad_bias.assign(head.classes, 0.0);
  const double inv_n = 1.0 / static_cast<double>(features.size());
  for (std::size_t s = 0; s < features.size(); ++s) {
    const int y = labels[s];
    if (y < 0 || static_cast<std::size_t>(y) >= head.classes) {
      throw DomainError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(head.classes) + ")");
    }
    const Vector z = head.logits(features[s]);
    out.loss += (logsumexp(z) - z[static_cast<std::size_t>(y)]) * inv_n;
    const Vector p = softmax(z);
    for (std::size_t k = 0; k < head.classes; ++k) {
      const double g = (p[k] - (static_cast<std::size_t>(y) == k ? 1.0 : 0.0)) * inv_n;
      out.grad_bias[k] += g;
      double* gw = out.grad_weights.data() + k * head.in_dim;
      for (std::size_t i = 0; i < head.in_dim; ++i) gw[i] += g * features[s][i];
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw DomainError("learning_rate must be > 0");
  }
  if (batch_size == 0) throw DomainError("batch_size must be > 0");
}

TrainResult train_head(std::span<const Vector> features, std::span<const int> labels,
                       std::vector<std::string> class_labels, const TrainConfig& config) {
  config.validate();
  if (features.empty()) throw DomainError("train_head: empty data");
  if (features.size() != labels.size()) throw DomainError("train_head: features/labels length");
  const std::size_t in_dim = features.front().size();
  for (const Vector& f : features) check_dims(f.size(), in_dim, "train_head features");

  TrainResult result{SoftmaxHead::zeros(in_dim, std::move(class_labels)), {}};
  SoftmaxHead& head = result.head;
  for (const int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= head.classes) {
      throw DomainError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(head.classes) + ")");
    }
  }

  SplitMix64 rng(config.seed);
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Vector> batch_x;
  std::vector<int> batch_y;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t k = begin; k < end; ++k) {
        batch_x.push_back(features[order[k]]);
        batch_y.push_back(labels[order[k]]);
      }
      const CrossEntropy ce = cross_entropy(head, batch_x, batch_y);
      epoch_loss += ce.loss * static_cast<double>(end - begin);
      for (std::size_t w = 0; w < head.weights.size(); ++w) {
        head.weights[w] -= config.learning_rate * ce.grad_weights[w];
      }
      for (std::size_t k = 0; k < head.classes; ++k) {
        head.bias[k] -= config.learning_rate * ce.grad_bias[k];
      }
    }
    if (!head.finite()) throw DataError("train_head: weights diverged at epoch " + std::to_string(epoch));
    result.loss_trace.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return result;
}

Prediction predict(const SoftmaxHead& head, std::span<const double> x) {
  Prediction p;
  p.probabilities = head_forward(head, x);
  // max_element returns the first maximum: ties go to the lowest index.
  p.index = static_cast<std::size_t>(
      std::max_element(p.probabilities.begin(), p.probabilities.end()) - p.probabilities.begin());
  p.label = head.class_labels[p.index];
  return p;
}

Prediction predict_topic(const SoftmaxHead& head, std::span<const float> embedding) {
  if (head.classes != corpus::kTopicCount) {
    throw DomainError("topic head must have " + std::to_string(corpus::kTopicCount) +
                      " classes, has " + std::to_string(head.classes));
  }
  const Vector x(embedding.begin(), embedding.end());
  return predict(head, x);
}

// --- persistence ----------------------------------------------------------------------

void save_head(const SoftmaxHead& head, std::ostream& out) {
  const json j = {{"in_dim", head.in_dim},
                  {"classes", head.classes},
                  {"class_labels", head.class_labels},
                  {"weights", head.weights},
                  {"bias", head.bias}};
  out << j.dump() << '\n';
}

SoftmaxHead load_head(std::istream& in) {
  SoftmaxHead h;
  try {
    const json j = json::parse(in);
    h.in_dim = j.at("in_dim").get<std::size_t>();
    h.classes = j.at("classes").get<std::size_t>();
    h.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    h.weights = j.at("weights").get<std::vector<double>>();
    h.bias = j.at("bias").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("head JSON: ") + e.what());
  }
  if (h.in_dim == 0 || h.classes < 2 || h.class_labels.size() != h.classes ||
      h.weights.size() != h.classes * h.in_dim || h.bias.size() != h.classes) {
    throw FormatError("head JSON: inconsistent dimensions");
  }
  if (!h.finite()) throw DataError("head JSON: non-finite weights");
  return h;
}

void save_head(const SoftmaxHead& head, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  save_head(head, out);
}

SoftmaxHead load_head(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return load_head(in);
}

}  // namespace qurious::heads
