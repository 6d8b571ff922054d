#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "facecamo/errors.hpp"
#include "facecamo/model.hpp"
#include "facecamo/optimizer.hpp"
#include "facecamo/toy_model.hpp"

namespace facecamo {
namespace {

TEST(Cosine, Identity) {
  const std::vector<double> u{0.3, -1.2, 2.0};
  EXPECT_NEAR(cosine_similarity(u, u), 1.0, 1e-15);
}

TEST(Cosine, Orthogonal) {
  EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 0, 0}, std::vector<double>{0, 1, 0}), 0.0, 1e-15);
}

TEST(Cosine, Opposite) {
  const std::vector<double> u{0.5, 2.0, -1.0}, v{-0.5, -2.0, 1.0};
  EXPECT_NEAR(cosine_similarity(u, v), -1.0, 1e-15);
}

TEST(Cosine, ZeroVectorIsAContractError) {
  EXPECT_THROW(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), ContractError);
  EXPECT_THROW(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}), ContractError);
}

TEST(Threshold, SeparableScoresUseTheMidpoint) {
  const std::vector<double> mated{0.9, 0.8}, nonmated{0.1, 0.2};
  const ThresholdChoice t = choose_threshold(mated, nonmated);
  EXPECT_DOUBLE_EQ(t.threshold, 0.5);
  EXPECT_DOUBLE_EQ(t.accuracy, 1.0);
}

TEST(Threshold, SingleClassIsACalibrationError) {
  const std::vector<double> mated{0.9, 0.8}, none;
  EXPECT_THROW(choose_threshold(mated, none), CalibrationError);
  EXPECT_THROW(choose_threshold(none, mated), CalibrationError);
}

// Exhaustive reference: every midpoint of adjacent distinct scores, ties to the
// larger threshold.
ThresholdChoice brute_force(const std::vector<double>& mated, const std::vector<double>& nonmated) {
  std::vector<double> all = mated;
  all.insert(all.end(), nonmated.begin(), nonmated.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  ThresholdChoice best{0.0, -1.0};
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    const double t = 0.5 * (all[i] + all[i + 1]);
    int correct = 0;
    for (double s : mated) correct += s >= t;
    for (double s : nonmated) correct += s < t;
    const double acc = static_cast<double>(correct) / static_cast<double>(mated.size() + nonmated.size());
    if (acc >= best.accuracy) best = {t, acc};
  }
  return best;
}

TEST(Threshold, InterleavedScoresFollowTheTieRule) {
  const std::vector<double> mated{0.1, 0.3, 0.5, 0.7}, nonmated{0.2, 0.4, 0.6, 0.8};
  const ThresholdChoice got = choose_threshold(mated, nonmated);
  const ThresholdChoice want = brute_force(mated, nonmated);
  EXPECT_DOUBLE_EQ(got.threshold, want.threshold);
  EXPECT_DOUBLE_EQ(got.accuracy, want.accuracy);
  EXPECT_DOUBLE_EQ(got.accuracy, 0.5);
}

TEST(Threshold, MatchesBruteForceOnRandomScores) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> mated(1 + uniform_index(rng, 12)), nonmated(1 + uniform_index(rng, 12));
    // Coarse grid so ties occur.
    for (double& s : mated) s = static_cast<double>(uniform_index(rng, 10)) / 10.0;
    for (double& s : nonmated) s = static_cast<double>(uniform_index(rng, 10)) / 10.0;
    const ThresholdChoice want = brute_force(mated, nonmated);
    if (want.accuracy < 0.0) continue;  // one distinct score
    const ThresholdChoice got = choose_threshold(mated, nonmated);
    EXPECT_DOUBLE_EQ(got.threshold, want.threshold);
    EXPECT_DOUBLE_EQ(got.accuracy, want.accuracy);
  }
}

TEST(Threshold, AccuracyIsInvariantUnderMonotoneTransforms) {
  Rng rng(23);
  std::vector<double> mated(30), nonmated(30);
  for (double& s : mated) s = uniform(rng, 0.2, 1.0);
  for (double& s : nonmated) s = uniform(rng, -0.5, 0.6);
  auto warp = [](std::vector<double> v) {
    for (double& s : v) s = std::exp(3.0 * s) + 2.0;
    return v;
  };
  EXPECT_DOUBLE_EQ(choose_threshold(mated, nonmated).accuracy,
                   choose_threshold(warp(mated), warp(nonmated)).accuracy);
}

TEST(AcceptanceRate, CountsScoresAtOrAboveThreshold) {
  const std::vector<double> s{0.1, 0.5, 0.5, 0.9};
  EXPECT_DOUBLE_EQ(acceptance_rate(s, 0.5), 0.75);
  EXPECT_DOUBLE_EQ(acceptance_rate(s, 0.95), 0.0);
}

ToyEmbeddingNet untrained(std::uint64_t seed = 5) {
  return ToyEmbeddingNet(ToyArchitecture{}, PreprocessingProfile{}, seed);
}

Image noise_image(std::uint64_t seed) {
  Rng rng(seed);
  Image img(kCanonicalCanvas, kCanonicalCanvas, 3);
  for (double& v : img.storage()) v = uniform(rng, 0.0, 1.0);
  return img;
}

TEST(ToyNet, EmbeddingsAreUnitLength) {
  const ToyEmbeddingNet net = untrained();
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Embedding e = net.embed(noise_image(s));
    double n2 = 0.0;
    for (double v : e) n2 += v * v;
    EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-6);
    EXPECT_EQ(static_cast<int>(e.size()), net.embedding_dim());
  }
}

TEST(ToyNet, InferenceIsDeterministic) {
  const ToyEmbeddingNet net = untrained();
  const Image img = noise_image(3);
  EXPECT_EQ(net.embed(img), net.embed(img));
  EXPECT_EQ(untrained(9).checksum(), untrained(9).checksum());
  EXPECT_NE(untrained(9).checksum(), untrained(10).checksum());
}

TEST(ToyNet, WrongShapeIsAContractError) {
  const ToyEmbeddingNet net = untrained();
  EXPECT_THROW(net.embed(Image(64, 64, 3)), ContractError);
  EXPECT_THROW(net.embed(Image(kCanonicalCanvas, kCanonicalCanvas, 1)), ContractError);
}

TEST(ToyNet, InputGradientMatchesFiniteDifferences) {
  const ToyEmbeddingNet net = untrained(12);
  Image img = noise_image(4);
  Rng rng(6);
  std::vector<double> u(static_cast<std::size_t>(net.embedding_dim()));
  for (double& v : u) v = uniform(rng, -1.0, 1.0);
  auto loss = [&](const Image& x) {
    const Embedding e = net.embed(x);
    double s = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) s += u[k] * e[k];
    return s;
  };
  const Image g = net.embed_backward(img, u);
  const auto [e, g2] = net.embed_with_gradient(img, u);
  EXPECT_EQ(e, net.embed(img));
  EXPECT_EQ(g, g2);
  for (int trial = 0; trial < 12; ++trial) {
    const int y = static_cast<int>(uniform_index(rng, kCanonicalCanvas));
    const int x = static_cast<int>(uniform_index(rng, kCanonicalCanvas));
    const int c = static_cast<int>(uniform_index(rng, 3));
    const double h = 1e-4;
    Image hi = img, lo = img;
    hi.at(y, x, c) += h;
    lo.at(y, x, c) -= h;
    const double fd = (loss(hi) - loss(lo)) / (2.0 * h);
    EXPECT_NEAR(g.at(y, x, c), fd, 1e-6 + 1e-3 * std::abs(fd));
  }
}

TEST(ToyNet, SaveLoadRoundTrip) {
  const ToyEmbeddingNet net = untrained(31);
  const auto path = std::filesystem::temp_directory_path() / "facecamo_unit_toy.bin";
  net.save(path);
  const ToyEmbeddingNet back = ToyEmbeddingNet::load(path);
  EXPECT_EQ(back.checksum(), net.checksum());
  EXPECT_EQ(back.architecture(), net.architecture());
  EXPECT_EQ(back.profile(), net.profile());
  std::filesystem::remove(path);
}

std::shared_ptr<const FaceSample> sample(const std::string& id, std::uint64_t seed) {
  auto s = std::make_shared<FaceSample>();
  s->identity = id;
  s->image = noise_image(seed);
  s->mask = Image(kCanonicalCanvas, kCanonicalCanvas, 1, 1.0);
  return s;
}

TEST(Verification, MakePairChecksIdentities) {
  EXPECT_TRUE(make_pair(sample("a", 1), sample("a", 2)).mated);
  EXPECT_FALSE(make_pair(sample("a", 1), sample("b", 2)).mated);
}

TEST(Verification, UncalibratedModelIsAContractError) {
  ModelHandle h;
  h.name = "toy";
  h.model = std::make_shared<ToyEmbeddingNet>(untrained());
  const std::vector<VerificationPair> pairs{make_pair(sample("a", 1), sample("a", 2))};
  EXPECT_THROW(recognition_rate(h, pairs), ContractError);
}

TEST(Verification, RecognitionRateWithoutPatternEqualsCalibratedBaseline) {
  ModelHandle h;
  h.name = "toy";
  h.model = std::make_shared<ToyEmbeddingNet>(untrained());
  std::vector<VerificationPair> pairs;
  for (int i = 0; i < 6; ++i) {
    const std::string id = "id" + std::to_string(i);
    pairs.push_back(make_pair(sample(id, 100 + i), sample(id, 200 + i)));
    pairs.push_back(make_pair(sample(id, 300 + i), sample("other" + std::to_string(i), 400 + i)));
  }
  calibrate_threshold(h, pairs);
  ASSERT_TRUE(h.baseline);
  EXPECT_DOUBLE_EQ(recognition_rate(h, pairs), *h.baseline);
}

// Embedding backend with no input gradients.
class OpaqueModel final : public EmbeddingModel {
 public:
  std::string adapter_id() const override { return "opaque"; }
  int embedding_dim() const override { return 2; }
  PreprocessingProfile profile() const override { return {}; }
  bool gradient_capable() const override { return false; }
  bool concurrency_safe() const override { return true; }
  Embedding embed(const Image& image) const override {
    const double m = image.at(0, 0, 0);
    const double n = std::hypot(1.0, m);
    return {1.0 / n, m / n};
  }
};

TEST(Capability, WhiteboxOnAnOpaqueModelIsACapabilityError) {
  ModelHandle h;
  h.name = "opaque";
  h.model = std::make_shared<OpaqueModel>();
  EXPECT_THROW(h.model->embed_backward(noise_image(1), std::vector<double>{1.0, 0.0}), CapabilityError);

  std::vector<VerificationPair> pairs{make_pair(sample("a", 1), sample("a", 2)),
                                      make_pair(sample("a", 3), sample("b", 4))};
  calibrate_threshold(h, pairs);
  const MatedScorer scorer(h, pairs);
  EXPECT_THROW(AttackObjective(scorer, AttackSettings{}, Backend::kWhitebox), CapabilityError);
  const AttackObjective blackbox(scorer, AttackSettings{}, Backend::kBlackbox);
  const auto loss = blackbox.batch_loss({0});
  EXPECT_FALSE(loss.gradient_capable());
  EXPECT_THROW(gradient(PatternParams{}, loss, Backend::kWhitebox), CapabilityError);
  EXPECT_NO_THROW(gradient(PatternParams{}, loss, Backend::kBlackbox));
}

TEST(AdapterRegistry, ToyIsAlwaysAvailable) {
  EXPECT_TRUE(AdapterRegistry::instance().contains("toy"));
  EXPECT_FALSE(AdapterRegistry::instance().contains("no-such-adapter"));
}

}  // namespace
}  // namespace facecamo
