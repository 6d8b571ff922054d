#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "facecamo/errors.hpp"
#include "facecamo/optimizer.hpp"

namespace facecamo {
namespace {

TEST(LrSchedule, EndpointsAreExact) {
  for (int total : {1, 7, 100, 500}) {
    EXPECT_EQ(lr_schedule(0, total, 0.05, 0.001), 0.05);
    EXPECT_EQ(lr_schedule(total, total, 0.05, 0.001), 0.001);
  }
}

TEST(LrSchedule, MidpointIsTheAverage) {
  EXPECT_NEAR(lr_schedule(250, 500, 0.05, 0.001), 0.0255, 1e-15);
}

TEST(LrSchedule, DecreasesMonotonically) {
  double prev = lr_schedule(0, 500, 0.05, 0.001);
  for (int i = 1; i <= 500; ++i) {
    const double cur = lr_schedule(i, 500, 0.05, 0.001);
    EXPECT_LE(cur, prev);
    prev = cur;
  }
}

// f(theta) = sum (theta - theta0)^2 over every continuous field.
class Quadratic final : public LossFunction {
 public:
  explicit Quadratic(PatternParams centre) : c_(std::move(centre)) {}
  double value(const PatternParams& p) const override {
    double s = sq(p.width_frac - c_.width_frac) + sq(p.angle - c_.angle) + sq(p.phase - c_.phase);
    for (std::size_t k = 0; k < p.colors.size(); ++k)
      for (int c = 0; c < 3; ++c) s += sq(p.colors[k][c] - c_.colors[k][c]);
    return s;
  }

 private:
  static double sq(double v) { return v * v; }
  PatternParams c_;
};

TEST(FiniteDifferences, ExactOnAQuadratic) {
  PatternParams centre, p;
  centre.width_frac = 0.2;
  centre.angle = 1.0;
  centre.phase = 0.3;
  centre.colors = {{10, 20, 30}, {200, 100, 50}};
  p.width_frac = 0.31;
  p.angle = 2.2;
  p.phase = 0.05;
  p.colors = {{40, 10, 90}, {120, 130, 250}};
  const ParamGradient g = gradient(p, Quadratic(centre), Backend::kBlackbox);
  EXPECT_NEAR(g.width_frac, 2.0 * (p.width_frac - centre.width_frac), 1e-4);
  EXPECT_NEAR(g.angle, 2.0 * (p.angle - centre.angle), 1e-4);
  EXPECT_NEAR(g.phase, 2.0 * (p.phase - centre.phase), 1e-4);
  for (std::size_t k = 0; k < 2; ++k)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(g.colors[k][c], 2.0 * (p.colors[k][c] - centre.colors[k][c]), 1e-4);
}

TEST(FiniteDifferences, WhiteboxNeedsAnAnalyticGradient) {
  EXPECT_THROW(gradient(PatternParams{}, Quadratic(PatternParams{}), Backend::kWhitebox), CapabilityError);
}

TEST(Normalization, RoundTrips) {
  PatternParams p;
  p.width_frac = 0.3;
  p.angle = 2.0;
  p.phase = 0.7;
  p.colors = {{1, 2, 3}, {4, 5, 6}, {250, 0, 128}};
  PatternParams q = p;
  from_normalized(to_normalized(p), q);
  EXPECT_NEAR(q.angle, p.angle, 1e-15);
  for (std::size_t k = 0; k < 3; ++k)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(q.colors[k][c], p.colors[k][c], 1e-12);
}

TEST(Normalization, GradientFollowsTheChainRule) {
  ParamGradient g;
  g.width_frac = 1.0;
  g.angle = 2.0;
  g.phase = 3.0;
  g.colors = {{1.0, 0.0, -1.0}};
  const std::vector<double> v = normalized_gradient(g);
  EXPECT_DOUBLE_EQ(v[1], 2.0 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(v[3], 255.0);
  EXPECT_DOUBLE_EQ(v[5], -255.0);
}

// Reference exit tests, written independently of the library.
bool no_improvement(const std::vector<double>& a, int e) {
  const int i = static_cast<int>(a.size()) - 1;
  if (i < e) return false;
  double before = 1e9, recent = 1e9;
  for (int k = 0; k <= i - e; ++k) before = std::min(before, a[k]);
  for (int k = i - e + 1; k <= i; ++k) recent = std::min(recent, a[k]);
  return recent >= before;
}

bool literal_max(const std::vector<double>& a, int e) {
  const int i = static_cast<int>(a.size()) - 1;
  if (i < e) return false;
  double m = -1e9;
  for (int k = std::max(1, i - e + 1); k <= i; ++k) m = std::max(m, a[k]);
  return m == a[i - e];
}

TEST(EarlyStop, MatchesTheReferenceOnRandomSequences) {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int e = 1 + static_cast<int>(uniform_index(rng, 6));
    std::vector<double> a;
    for (int i = 0; i < 40; ++i) {
      a.push_back(static_cast<double>(uniform_index(rng, 5)) / 4.0);
      EXPECT_EQ(should_stop_early(a, e, false), no_improvement(a, e));
      EXPECT_EQ(should_stop_early(a, e, true), literal_max(a, e));
    }
  }
}

TEST(EarlyStop, NeverFiresBeforeTheWindowFills) {
  const std::vector<double> flat(5, 0.5);
  EXPECT_FALSE(should_stop_early(std::span(flat).first(3), 3, false));
  EXPECT_TRUE(should_stop_early(std::span(flat).first(4), 3, false));
}

// Replays scripted batch accuracies; the gradient pulls every parameter
// toward `pull` (negative means "increase").
class ScriptedObjective final : public PatternObjective {
 public:
  explicit ScriptedObjective(std::vector<double> acc, double pull = 1.0) : acc_(std::move(acc)), pull_(pull) {}
  std::size_t num_samples() const override { return 10; }
  BatchEvaluation evaluate(const PatternParams& p, std::span<const std::size_t> batch, bool) const override {
    EXPECT_FALSE(batch.empty());
    const double a = acc_[std::min(calls_, acc_.size() - 1)];
    BatchEvaluation ev;
    ev.loss = a;
    ev.accuracy = a;
    ParamGradient g;
    const double pull = grad_schedule_ ? grad_schedule_(calls_) : pull_;
    g.width_frac = pull;
    g.angle = pull;
    g.phase = pull;
    g.colors.assign(p.colors.size(), Color{-pull, -pull, -pull});
    ev.gradient = g;
    last_ = a;
    ++calls_;
    return ev;
  }
  double full_accuracy(const PatternParams&) const override { return last_; }

  std::function<double(std::size_t)> grad_schedule_;

 private:
  std::vector<double> acc_;
  double pull_;
  mutable std::size_t calls_ = 0;
  mutable double last_ = 1.0;
};

int reference_stop(const std::vector<double>& acc, int e, bool strict, int max_iterations) {
  std::vector<double> seen;
  for (int i = 0; i <= max_iterations; ++i) {
    seen.push_back(acc[std::min<std::size_t>(i, acc.size() - 1)]);
    if (i == max_iterations) return i;
    if (strict ? literal_max(seen, e) : no_improvement(seen, e)) return i;
  }
  return max_iterations;
}

TEST(OptimizePattern, StopsWhereTheReferenceSays) {
  Rng rng(5);
  for (bool strict : {false, true}) {
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> acc;
      double level = 1.0;
      for (int i = 0; i < 120; ++i) {
        if (uniform(rng, 0, 1) < 0.15) level = std::max(0.0, level - 0.05);
        acc.push_back(uniform(rng, 0, 1) < 0.3 ? std::min(1.0, level + 0.05) : level);
      }
      OptimizationConfig cfg;
      cfg.max_iterations = 100;
      cfg.early_stop_window = 5 + static_cast<int>(uniform_index(rng, 10));
      cfg.strict_compat = strict;
      cfg.seed = static_cast<std::uint64_t>(trial);
      const ScriptedObjective obj(acc);
      const OptimizationTrace t = optimize_pattern(cfg, Family::kStripes, obj);
      const int stop = reference_stop(acc, cfg.early_stop_window, strict, cfg.max_iterations);
      ASSERT_EQ(static_cast<int>(t.iterations.size()), stop + 1) << "trial " << trial << " strict " << strict;
      EXPECT_EQ(t.stop_reason, stop == cfg.max_iterations ? "max_iterations" : "early_stop");
    }
  }
}

TEST(OptimizePattern, NeverExceedsMaxIterations) {
  std::vector<double> acc(600);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = 1.0 - static_cast<double>(i) / 1000.0;
  const ScriptedObjective obj(acc);
  OptimizationConfig cfg;  // defaults: 500 iterations, window 100
  const OptimizationTrace t = optimize_pattern(cfg, Family::kChevrons, obj);
  ASSERT_EQ(t.iterations.size(), 501u);
  EXPECT_EQ(t.iterations.back().index, 500);
  EXPECT_EQ(t.stop_reason, "max_iterations");
  EXPECT_EQ(t.iterations.front().lr, cfg.lr_max);
  EXPECT_EQ(t.iterations.back().lr, cfg.lr_min);
}

TEST(OptimizePattern, ZeroIterationsKeepsTheInitialPattern) {
  OptimizationConfig cfg;
  cfg.max_iterations = 0;
  const ScriptedObjective obj({0.7});
  const OptimizationTrace t = optimize_pattern(cfg, Family::kStripes, obj);
  ASSERT_EQ(t.iterations.size(), 1u);
  EXPECT_EQ(t.best_index, 0);
  EXPECT_EQ(t.best_params, t.iterations[0].params);
  EXPECT_DOUBLE_EQ(t.best_accuracy, 0.7);
  ASSERT_TRUE(t.iterations[0].full_accuracy);
}

TEST(OptimizePattern, BestIsTheEarliestFullEvaluationMinimum) {
  // Full evaluations at 0, 5, 10, 15 and at exit (20).
  std::vector<double> acc(21, 0.9);
  acc[5] = 0.4;
  acc[10] = 0.3;
  acc[15] = 0.3;
  acc[12] = 0.1;  // batch only, not fully evaluated
  OptimizationConfig cfg;
  cfg.max_iterations = 20;
  cfg.early_stop_window = 20;
  cfg.full_eval_interval = 5;
  const ScriptedObjective obj(acc);
  const OptimizationTrace t = optimize_pattern(cfg, Family::kStripes, obj);
  EXPECT_EQ(t.best_index, 10);
  EXPECT_DOUBLE_EQ(t.best_accuracy, 0.3);
  EXPECT_EQ(t.best_params, t.iterations[10].params);
  for (const IterationRecord& r : t.iterations)
    EXPECT_EQ(r.full_accuracy.has_value(), r.index % 5 == 0) << r.index;
}

TEST(OptimizePattern, SameSeedSameTrace) {
  std::vector<double> acc(60);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = 1.0 / (1.0 + i);
  OptimizationConfig cfg;
  cfg.max_iterations = 50;
  cfg.early_stop_window = 10;
  cfg.seed = 42;
  const ScriptedObjective a(acc), b(acc);
  const OptimizationTrace ta = optimize_pattern(cfg, Family::kChevrons, a);
  const OptimizationTrace tb = optimize_pattern(cfg, Family::kChevrons, b);
  ASSERT_EQ(ta.iterations.size(), tb.iterations.size());
  for (std::size_t i = 0; i < ta.iterations.size(); ++i)
    EXPECT_EQ(to_json(ta.iterations[i]).dump(), to_json(tb.iterations[i]).dump());
  cfg.seed = 43;
  const ScriptedObjective c(acc);
  EXPECT_NE(optimize_pattern(cfg, Family::kChevrons, c).iterations[0].params, ta.iterations[0].params);
}

TEST(OptimizePattern, ParamsStayInBoundsAndPhaseWraps) {
  OptimizationConfig cfg;
  cfg.max_iterations = 200;
  cfg.early_stop_window = 200;
  cfg.lr_max = 0.2;
  for (double pull : {1.0, -1.0}) {
    const ScriptedObjective obj({0.5}, pull);
    const OptimizationTrace t = optimize_pattern(cfg, Family::kStripes, obj);
    for (const IterationRecord& r : t.iterations) {
      EXPECT_TRUE(within_bounds(r.params));
      EXPECT_GE(r.params.phase, 0.0);
      EXPECT_LT(r.params.phase, 1.0);
    }
  }
}

const Palette kSkin{{{224, 172, 105}, {141, 85, 36}, {255, 219, 172}, {198, 134, 66}}, 4.0};

TEST(OptimizePattern, ConstrainedModeClampsOnSchedule) {
  OptimizationConfig cfg;
  cfg.mode = Mode::kConstrained;
  cfg.max_iterations = 60;
  cfg.early_stop_window = 60;
  cfg.clamping_interval = 10;
  const ScriptedObjective obj({0.5}, -1.0);  // colours drift upward
  const OptimizationTrace t = optimize_pattern(cfg, Family::kStripes, obj, &kSkin);
  int drifted = 0;
  for (const IterationRecord& r : t.iterations) {
    EXPECT_EQ(r.clamped, r.index % 10 == 0) << r.index;
    if (r.index % 10 == 0) EXPECT_TRUE(within_palette(r.params.colors, kSkin)) << r.index;
    else drifted += !within_palette(r.params.colors, kSkin);
  }
  EXPECT_GT(drifted, 0);
  EXPECT_TRUE(within_palette(t.best_params.colors, kSkin));
}

TEST(OptimizePattern, ConstrainedBestIsAlwaysInThePalette) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> acc(40);
    for (double& a : acc) a = uniform(rng, 0.0, 1.0);
    OptimizationConfig cfg;
    cfg.mode = Mode::kConstrained;
    cfg.max_iterations = 39;
    cfg.early_stop_window = 39;
    cfg.full_eval_interval = 1;
    cfg.clamping_interval = 1 + static_cast<int>(uniform_index(rng, 12));
    cfg.seed = static_cast<std::uint64_t>(trial);
    const ScriptedObjective obj(acc, trial % 2 ? 1.0 : -1.0);
    const OptimizationTrace t = optimize_pattern(cfg, Family::kChevrons, obj, &kSkin);
    EXPECT_TRUE(within_palette(t.best_params.colors, kSkin)) << "trial " << trial;
  }
}

TEST(OptimizePattern, ClampingDoesNotResetAdamMoments) {
  OptimizationConfig cfg;
  cfg.mode = Mode::kConstrained;
  cfg.max_iterations = 20;
  cfg.early_stop_window = 20;
  cfg.clamping_interval = 10;
  cfg.lr_max = 0.005;
  cfg.lr_min = 0.005;
  ScriptedObjective obj({0.5});
  // Push the phase one way for ten steps, then the other. Momentum carries
  // the first direction past the clamp at step 10; a reset would reverse at
  // once. Phase is unbounded, so clipping cannot mask the effect.
  obj.grad_schedule_ = [](std::size_t call) { return call < 10 ? -1.0 : 1.0; };
  const OptimizationTrace t = optimize_pattern(cfg, Family::kStripes, obj, &kSkin);
  ASSERT_GE(t.iterations.size(), 13u);
  auto advance = [&](int i) {
    const double d = t.iterations[i + 1].params.phase - t.iterations[i].params.phase;
    return d - std::round(d);
  };
  EXPECT_GT(advance(9), 0.0);
  EXPECT_GT(advance(10), 0.0);
  EXPECT_GT(advance(11), 0.0);
}

TEST(OptimizePattern, ConstrainedWithoutPaletteIsAConfigError) {
  OptimizationConfig cfg;
  cfg.mode = Mode::kConstrained;
  const ScriptedObjective obj({0.5});
  EXPECT_THROW(optimize_pattern(cfg, Family::kStripes, obj), ConfigError);
}

TEST(OptimizationConfig, RejectsViolatedInvariants) {
  auto bad = [](auto&& edit) {
    OptimizationConfig c;
    edit(c);
    return c;
  };
  EXPECT_NO_THROW(validate(OptimizationConfig{}));
  EXPECT_THROW(validate(bad([](auto& c) { c.early_stop_window = 600; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.batch_size = 0; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.lr_min = 0.1; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.max_iterations = -1; })), ConfigError);
  EXPECT_THROW(validate(bad([](auto& c) { c.clamping_interval = 0; })), ConfigError);
  EXPECT_NO_THROW(validate(bad([](auto& c) { c.max_iterations = 0; })));
}

TEST(BatchSampler, EachEpochCoversThePopulationOnce) {
  BatchSampler s(10, 4, 3);
  std::multiset<std::size_t> seen;
  for (int b = 0; b < 5; ++b)
    for (std::size_t i : s.next()) seen.insert(i);
  // 20 draws over two epochs of 10.
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(seen.count(i), 2u);
}

TEST(BatchSampler, IsDeterministic) {
  BatchSampler a(50, 8, 9), b(50, 8, 9);
  for (int k = 0; k < 20; ++k) EXPECT_EQ(a.next(), b.next());
}

TEST(Trace, RoundTripsThroughJsonl) {
  const auto path = std::filesystem::temp_directory_path() / "facecamo_unit_trace.jsonl";
  std::vector<IterationRecord> recs(3);
  for (int i = 0; i < 3; ++i) {
    recs[i].index = i;
    recs[i].params.width_frac = 0.1 + i * 0.01;
    recs[i].params.angle = 1.0 / 3.0;
    recs[i].loss = 0.123456789012345;
    recs[i].accuracy = 0.5;
    recs[i].lr = lr_schedule(i, 2, 0.05, 0.001);
    recs[i].clamped = i == 1;
    if (i != 1) recs[i].full_accuracy = 0.25 * i;
  }
  {
    TraceWriter w(path);
    for (const auto& r : recs) w.append(r);
  }
  const std::vector<IterationRecord> back = read_trace(path);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].params, recs[i].params);
    EXPECT_EQ(back[i].loss, recs[i].loss);
    EXPECT_EQ(back[i].lr, recs[i].lr);
    EXPECT_EQ(back[i].full_accuracy, recs[i].full_accuracy);
    EXPECT_EQ(back[i].clamped, recs[i].clamped);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace facecamo
