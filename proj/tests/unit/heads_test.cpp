#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "qurious/embedding.hpp"
#include "qurious/error.hpp"
#include "qurious/heads.hpp"
#include "qurious/rng.hpp"

using namespace qurious;
using namespace qurious::heads;

namespace {

Vector gaussian(SplitMix64& rng, std::size_t d) {
  Vector v(d);
  for (auto& x : v) x = rng.gaussian();
  return v;
}

double cos_dist(const Vector& u, const Vector& v) {
  double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  return 1.0 - uv / std::sqrt(uu * vv);
}

}  // namespace

TEST(PairFeatures, Definition) {
  EXPECT_EQ(pair_features(Vector{1, 0}, Vector{0, 1}), (Vector{1, 0, 0, 1, 1, 1}));
  EXPECT_EQ(pair_features(Vector{2, -1}, Vector{-1, 3}), (Vector{2, -1, -1, 3, 3, 4}));
  const auto same = pair_features(Vector{0.5, -2, 3}, Vector{0.5, -2, 3});
  for (std::size_t i = 6; i < 9; ++i) EXPECT_EQ(same[i], 0.0);
  EXPECT_THROW(pair_features(Vector{1}, Vector{1, 2}), DomainError);
}

TEST(Softmax, UniformStableAndHandValue) {
  const auto head = SoftmaxHead::zeros(4, {"a", "b", "c"});
  for (const double p : head_forward(head, Vector{1, 2, 3, 4})) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  const auto big = softmax(Vector{1000, 0});
  EXPECT_NEAR(big[0], 1.0, 1e-12);
  EXPECT_NEAR(big[1], 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(big[1]));

  auto h2 = SoftmaxHead::zeros(2, {"x", "y"});
  h2.weights = {1, 0, 0, 1};
  const auto p = head_forward(h2, Vector{1, 0});
  EXPECT_NEAR(p[0], std::exp(1.0) / (std::exp(1.0) + 1), 1e-12);
  EXPECT_NEAR(p[0], 0.7311, 1e-4);
  EXPECT_NEAR(p[1], 0.2689, 1e-4);
}

TEST(Softmax, RandomHeadsSumToOne) {
  SplitMix64 rng(9);
  for (int t = 0; t < 20; ++t) {
    auto h = SoftmaxHead::zeros(5, {"a", "b", "c", "d"});
    for (auto& w : h.weights) w = 3 * rng.gaussian();
    for (auto& b : h.bias) b = rng.gaussian();
    double s = 0;
    for (const double p : head_forward(h, gaussian(rng, 5))) s += p;
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Contrastive, SpotValues) {
  const ContrastiveConfig off{0.5, false};
  const LabeledPair same{{0.6, 0.8}, {0.6, 0.8}, 1};
  const auto zero = contrastive_loss(std::span(&same, 1), off);
  EXPECT_NEAR(zero.loss, 0.0, 1e-15);
  for (const double g : zero.grad_first[0]) EXPECT_NEAR(g, 0.0, 1e-12);

  // cos = 0.3 -> D = 0.7 beyond the margin.
  const LabeledPair far{{1, 0}, {0.3, std::sqrt(1 - 0.09)}, 0};
  EXPECT_NEAR(contrastive_loss(std::span(&far, 1), off).loss, 0.0, 1e-15);

  // cos = 0.7 -> D = 0.3, (0.5 - 0.3)^2 = 0.04.
  const LabeledPair near{{1, 0}, {0.7, std::sqrt(1 - 0.49)}, 0};
  EXPECT_NEAR(contrastive_loss(std::span(&near, 1), off).loss, 0.04, 1e-9);
}

TEST(Contrastive, MiningSelectsHardPairs) {
  // Positive at D 0.1 is easier than the closest negative (D 0.3): dropped.
  // Negative at D 0.45 is farther than the hardest positive (D 0.1): dropped
  // unless some positive is farther.
  const auto at = [](double d) { return Vector{1 - d, std::sqrt(1 - (1 - d) * (1 - d))}; };
  std::vector<LabeledPair> batch{
      {{1, 0}, at(0.1), 1}, {{1, 0}, at(0.3), 0}, {{1, 0}, at(0.5), 1}, {{1, 0}, at(0.45), 0}};
  const auto mined = contrastive_loss(batch, {0.5, true});
  EXPECT_EQ(mined.contributing, (std::vector<bool>{false, true, true, true}));
  const double d2 = cos_dist(batch[2].u, batch[2].v), d1 = cos_dist(batch[1].u, batch[1].v),
               d3 = cos_dist(batch[3].u, batch[3].v);
  const double expect = (d2 * d2 + (0.5 - d1) * (0.5 - d1) + (0.5 - d3) * (0.5 - d3)) / 3.0;
  EXPECT_NEAR(mined.loss, expect, 1e-12);
  const auto all = contrastive_loss(batch, {0.5, false});
  EXPECT_EQ(all.contributing, (std::vector<bool>(4, true)));
}

TEST(Contrastive, Errors) {
  EXPECT_THROW(contrastive_loss({}, {}), DomainError);
  const LabeledPair zero{{0, 0}, {1, 0}, 1};
  EXPECT_THROW(contrastive_loss(std::span(&zero, 1), {}), DomainError);
  const LabeledPair bad{{1, 0}, {1, 0}, 2};
  EXPECT_THROW(contrastive_loss(std::span(&bad, 1), {}), DomainError);
  EXPECT_THROW((ContrastiveConfig{0.0, true}.validate()), DomainError);
}

TEST(Mnr, SpotValues) {
  const AnchorPair single{{1, 0}, {0.3, 0.7}};
  EXPECT_NEAR(mnr_loss(std::span(&single, 1), {}).loss, 0.0, 1e-15);

  const std::vector<AnchorPair> orth{{{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
  const double l = mnr_loss(orth, {20.0}).loss;
  EXPECT_NEAR(l, std::log1p(std::exp(-20.0)), 1e-15);
  EXPECT_LE(l, 1e-8);

  const std::vector<AnchorPair> same{{{1, 1}, {1, 1}}, {{1, 1}, {1, 1}}};
  EXPECT_NEAR(mnr_loss(same, {20.0}).loss, std::log(2.0), 1e-9);
}

namespace {

// Packs u_1, v_1, u_2, v_2, ... into one vector for finite differences.
std::vector<double> pack(const std::vector<LabeledPair>& b) {
  std::vector<double> x;
  for (const auto& p : b) {
    x.insert(x.end(), p.u.begin(), p.u.end());
    x.insert(x.end(), p.v.begin(), p.v.end());
  }
  return x;
}

std::vector<LabeledPair> unpack(const std::vector<double>& x, const std::vector<LabeledPair>& shape) {
  auto out = shape;
  std::size_t k = 0;
  for (auto& p : out) {
    for (auto& e : p.u) e = x[k++];
    for (auto& e : p.v) e = x[k++];
  }
  return out;
}

}  // namespace

TEST(GradientCheck, ContrastiveBothMiningModes) {
  SplitMix64 rng(41);
  for (const bool mining : {false, true}) {
    for (int inst = 0; inst < 10; ++inst) {
      const std::size_t d = 2 + rng.below(7), b = 1 + rng.below(5);
      std::vector<LabeledPair> batch;
      for (std::size_t i = 0; i < b; ++i) {
        batch.push_back({gaussian(rng, d), gaussian(rng, d), static_cast<int>(rng.below(2))});
      }
      const ContrastiveConfig cfg{1.2, mining};
      const auto res = contrastive_loss(batch, cfg);
      std::vector<double> analytic;
      for (std::size_t i = 0; i < b; ++i) {
        analytic.insert(analytic.end(), res.grad_first[i].begin(), res.grad_first[i].end());
        analytic.insert(analytic.end(), res.grad_second[i].begin(), res.grad_second[i].end());
      }
      const auto numeric = oracle::numeric_gradient(
          [&](const std::vector<double>& x) { return contrastive_loss(unpack(x, batch), cfg).loss; }, pack(batch));
      EXPECT_LE(oracle::relative_error(analytic, numeric), 1e-4) << "mining " << mining << " instance " << inst;
    }
  }
}

TEST(GradientCheck, Mnr) {
  SplitMix64 rng(42);
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t d = 2 + rng.below(7), b = 1 + rng.below(5);
    std::vector<AnchorPair> batch;
    for (std::size_t i = 0; i < b; ++i) batch.push_back({gaussian(rng, d), gaussian(rng, d)});
    const MnrConfig cfg{20.0};
    const auto res = mnr_loss(batch, cfg);
    std::vector<double> x, analytic;
    for (std::size_t i = 0; i < b; ++i) {
      x.insert(x.end(), batch[i].anchor.begin(), batch[i].anchor.end());
      x.insert(x.end(), batch[i].positive.begin(), batch[i].positive.end());
      analytic.insert(analytic.end(), res.grad_first[i].begin(), res.grad_first[i].end());
      analytic.insert(analytic.end(), res.grad_second[i].begin(), res.grad_second[i].end());
    }
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& v) {
          auto c = batch;
          std::size_t k = 0;
          for (auto& p : c) {
            for (auto& e : p.anchor) e = v[k++];
            for (auto& e : p.positive) e = v[k++];
          }
          return mnr_loss(c, cfg).loss;
        },
        x);
    EXPECT_LE(oracle::relative_error(analytic, numeric), 1e-4) << "instance " << inst;
  }
}

TEST(GradientCheck, CrossEntropy) {
  SplitMix64 rng(43);
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t d = 1 + rng.below(8), b = 1 + rng.below(5), classes = 2 + rng.below(4);
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < classes; ++c) labels.push_back("c" + std::to_string(c));
    auto head = SoftmaxHead::zeros(d, labels);
    for (auto& w : head.weights) w = rng.gaussian();
    for (auto& w : head.bias) w = rng.gaussian();
    std::vector<Vector> xs;
    std::vector<int> ys;
    for (std::size_t i = 0; i < b; ++i) {
      xs.push_back(gaussian(rng, d));
      ys.push_back(static_cast<int>(rng.below(classes)));
    }
    const auto res = cross_entropy(head, xs, ys);
    std::vector<double> params = head.weights, analytic = res.grad_weights;
    params.insert(params.end(), head.bias.begin(), head.bias.end());
    analytic.insert(analytic.end(), res.grad_bias.begin(), res.grad_bias.end());
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& p) {
          auto h = head;
          std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(h.weights.size()), h.weights.begin());
          std::copy(p.begin() + static_cast<std::ptrdiff_t>(h.weights.size()), p.end(), h.bias.begin());
          return cross_entropy(h, xs, ys).loss;
        },
        params);
    EXPECT_LE(oracle::relative_error(analytic, numeric), 1e-4) << "instance " << inst;
  }
}

TEST(Train, SeparableDataReachesFullAccuracy) {
  SplitMix64 rng(5);
  std::vector<Vector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 20; ++i) {
    const int y = i % 2;
    Vector x = gaussian(rng, 4);
    x[0] = (y == 1 ? 1.0 : -1.0) * (0.5 + std::abs(x[0]));
    xs.push_back(x);
    ys.push_back(y);
  }
  const auto res = train_head(xs, ys, {"neg", "pos"}, {0.5, 200, 8, 1});
  std::size_t right = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) right += predict(res.head, xs[i]).index == static_cast<std::size_t>(ys[i]);
  EXPECT_EQ(right, xs.size());
  EXPECT_EQ(res.loss_trace.size(), 200u);
  EXPECT_LT(res.loss_trace.back(), res.loss_trace.front());
}

TEST(Train, SingleClassDrivesLossDown) {
  SplitMix64 rng(6);
  std::vector<Vector> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(gaussian(rng, 3));
  const std::vector<int> ys(10, 1);
  const auto res = train_head(xs, ys, {"a", "b"}, {1.0, 300, 10, 2});
  EXPECT_LT(res.loss_trace.back(), 0.05);
  EXPECT_EQ(predict(res.head, xs[0]).label, "b");
}

TEST(Train, ConflictingLabelsStayAtHalf) {
  const std::vector<Vector> xs{{1, 2}, {1, 2}};
  const std::vector<int> ys{0, 1};
  const auto res = train_head(xs, ys, {"a", "b"}, {0.5, 200, 2, 3});
  const auto p = predict(res.head, xs[0]).probabilities;
  EXPECT_NEAR(p[0], 0.5, 1e-3);
  EXPECT_GE(cross_entropy(res.head, xs, ys).loss, std::log(2.0) - 1e-3);
}

TEST(Train, DeterministicGivenSeed) {
  SplitMix64 rng(7);
  std::vector<Vector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 30; ++i) {
    xs.push_back(gaussian(rng, 3));
    ys.push_back(i % 3);
  }
  const auto a = train_head(xs, ys, {"a", "b", "c"}, {0.1, 20, 4, 9});
  const auto b = train_head(xs, ys, {"a", "b", "c"}, {0.1, 20, 4, 9});
  EXPECT_EQ(a.head.weights, b.head.weights);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
}

TEST(Train, RejectsBadInput) {
  EXPECT_THROW(train_head({}, {}, {"a", "b"}, {}), DomainError);
  const std::vector<Vector> xs{{1.0}};
  const std::vector<int> bad{2};
  EXPECT_THROW(train_head(xs, bad, {"a", "b"}, {}), DomainError);
}

TEST(Predict, UniformHeadPicksFirstLabel) {
  const auto head = SoftmaxHead::zeros(3, {"first", "second"});
  EXPECT_EQ(predict(head, Vector{1, 2, 3}).label, "first");
}

TEST(Predict, TopicHeadOnClusteredMockData) {
  // Four topics, each a cluster around a mock-embedded keyword.
  const std::vector<std::string> topics{"sports", "health", "science", "money"};
  SplitMix64 rng(8);
  std::vector<Vector> train_x, test_x;
  std::vector<int> train_y, test_y;
  for (std::size_t t = 0; t < topics.size(); ++t) {
    const auto centre = embedding::mock_vector(topics[t], 32, 1);
    for (int i = 0; i < 40; ++i) {
      Vector x(32);
      for (std::size_t k = 0; k < 32; ++k) x[k] = centre[k] + 0.1 * rng.gaussian();
      (i < 30 ? train_x : test_x).push_back(x);
      (i < 30 ? train_y : test_y).push_back(static_cast<int>(t));
    }
  }
  const auto res = train_head(train_x, train_y, topics, {0.5, 100, 16, 4});
  std::size_t right = 0;
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    right += predict(res.head, test_x[i]).index == static_cast<std::size_t>(test_y[i]);
  }
  EXPECT_GT(static_cast<double>(right) / test_x.size(), 0.5);
}

TEST(Predict, TopicHeadNeedsTenClasses) {
  const auto head = SoftmaxHead::zeros(2, {"a", "b"});
  EXPECT_THROW(predict_topic(head, std::vector<float>{1, 0}), DomainError);
}

TEST(HeadIo, RoundTrip) {
  auto head = SoftmaxHead::zeros(3, {"a", "b"});
  head.weights = {0.1, -0.2, 0.3, 1e-17, 5, -6};
  head.bias = {0.25, -0.125};
  std::stringstream s;
  save_head(head, s);
  const auto back = load_head(s);
  EXPECT_EQ(back.weights, head.weights);
  EXPECT_EQ(back.bias, head.bias);
  EXPECT_EQ(back.class_labels, head.class_labels);
  std::istringstream junk("{\"in_dim\": 2}");
  EXPECT_THROW(load_head(junk), Error);
}
