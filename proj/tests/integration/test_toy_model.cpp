#include <gtest/gtest.h>

#include "facecamo/errors.hpp"
#include "facecamo/face_pipeline.hpp"
#include "facecamo/pattern.hpp"
#include "facecamo/toy_model.hpp"
#include "toy_env.hpp"

namespace facecamo {
namespace {

using test::toy_env;

TEST(ToyGate, TrainedModelMeetsTheAccuracyGate) {
  const auto& env = toy_env();
  const ModelHandle& a = env.model("toy_a");
  EXPECT_GE(verification_accuracy(a, env.pairs), 0.90);
  EXPECT_GE(recognition_rate(a, env.pairs), 0.95);
  EXPECT_GE(verification_accuracy(env.model("toy_b"), env.pairs), 0.90);
}

TEST(ToyGate, CalibratedBaselinesClearNinetyPercent) {
  for (const ModelHandle& m : toy_env().models) {
    ASSERT_TRUE(m.baseline);
    EXPECT_GE(*m.baseline, 0.90) << m.name;
  }
}

TEST(ToyTraining, SameSeedSameWeights) {
  ToyTrainOptions opt;
  opt.epochs = 2;
  opt.seed = 3;
  const auto a = train_toy_model(toy_env().dataset, opt);
  const auto b = train_toy_model(toy_env().dataset, opt);
  const auto& na = static_cast<const ToyEmbeddingNet&>(*a.handle.model);
  const auto& nb = static_cast<const ToyEmbeddingNet&>(*b.handle.model);
  EXPECT_EQ(na.checksum(), nb.checksum());
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
}

// Best balanced accuracy of mean-centred pixel cosine on the same pairs.
double raw_pixel_accuracy(const std::vector<VerificationPair>& pairs) {
  std::vector<double> mated, nonmated;
  for (const VerificationPair& p : pairs) {
    const auto a = p.probe->image.data();
    const auto b = p.gallery->image.data();
    std::vector<double> u(a.begin(), a.end()), v(b.begin(), b.end());
    double mu = 0, mv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) mu += u[i], mv += v[i];
    mu /= static_cast<double>(u.size());
    mv /= static_cast<double>(v.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] -= mu, v[i] -= mv;
    (p.mated ? mated : nonmated).push_back(cosine_similarity(u, v));
  }
  return choose_threshold(mated, nonmated).accuracy;
}

TEST(ToyTraining, UntrainedModelIsNoBetterThanRawPixels) {
  ToyTrainOptions opt;
  opt.epochs = 0;
  const auto r = train_toy_model(toy_env().dataset, opt);
  EXPECT_GE(r.heldout_accuracy, 0.5);
  EXPECT_NEAR(r.heldout_accuracy, raw_pixel_accuracy(toy_env().pairs), 0.1);
  EXPECT_LT(r.heldout_accuracy, verification_accuracy(toy_env().model("toy_a"), toy_env().pairs) - 0.1);
}

TEST(ToyTraining, TooFewIdentitiesIsADataError) {
  FaceDataset tiny;
  const auto& env = toy_env();
  for (std::size_t i = 0; i < 12; ++i) {
    tiny.samples.push_back(env.dataset.samples[i]);
    tiny.splits.push_back(env.dataset.splits[i]);
  }
  EXPECT_THROW(train_toy_model(tiny, ToyTrainOptions{}), DataError);
}

TEST(Recognition, NoPatternReproducesTheCalibratedBaseline) {
  for (const ModelHandle& m : toy_env().models) EXPECT_DOUBLE_EQ(recognition_rate(m, toy_env().pairs), *m.baseline);
}

TEST(Recognition, EmptyMaskPatternChangesNothing) {
  const auto& env = toy_env();
  const ModelHandle& m = env.model("toy_a");
  std::vector<VerificationPair> unmasked;
  for (const VerificationPair& p : env.mated()) {
    auto probe = std::make_shared<FaceSample>(*p.probe);
    probe->mask = Image(probe->image.height(), probe->image.width(), 1, 0.0);
    unmasked.push_back({probe, p.gallery, true});
  }
  PatternParams black;
  black.colors = {{0, 0, 0}, {0, 0, 0}};
  const PatternImage pattern = rasterize(black, kCanonicalCanvas, kCanonicalCanvas);
  const BlendConfig cfg{0.5, false};
  EXPECT_DOUBLE_EQ(recognition_rate(m, unmasked, &pattern, &cfg), recognition_rate(m, env.mated()));
}

TEST(Recognition, FullBlackOcclusionDoesNotBeatClean) {
  const auto& env = toy_env();
  std::vector<VerificationPair> covered;
  for (const VerificationPair& p : env.mated()) {
    auto probe = std::make_shared<FaceSample>(*p.probe);
    probe->mask = Image(probe->image.height(), probe->image.width(), 1, 1.0);
    covered.push_back({probe, p.gallery, true});
  }
  PatternParams black;
  black.colors = {{0, 0, 0}, {0, 0, 0}};
  const PatternImage pattern = rasterize(black, kCanonicalCanvas, kCanonicalCanvas);
  const BlendConfig forced{1.0, true};
  for (const ModelHandle& m : env.models)
    EXPECT_LE(recognition_rate(m, covered, &pattern, &forced), *m.baseline) << m.name;
}

TEST(Embedding, SameIdentityBeatsThresholdOnHeldOutPairs) {
  const auto& env = toy_env();
  const ModelHandle& m = env.model("toy_a");
  int above = 0, total = 0;
  for (const VerificationPair& p : env.mated()) {
    above += cosine_similarity(embed(m, p.probe->image), embed(m, p.gallery->image)) >= *m.threshold;
    ++total;
  }
  EXPECT_GE(static_cast<double>(above) / total, 0.95);
}

}  // namespace
}  // namespace facecamo
