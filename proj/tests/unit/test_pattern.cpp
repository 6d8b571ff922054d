#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "facecamo/errors.hpp"
#include "facecamo/pattern.hpp"
#include "toy_env.hpp"

namespace facecamo {
namespace {

constexpr double kPi = std::numbers::pi;

PatternParams two_tone(Family f, double width_frac, double angle, double phase = 0.0) {
  PatternParams p;
  p.family = f;
  p.width_frac = width_frac;
  p.angle = angle;
  p.phase = phase;
  p.colors = {{20.0, 40.0, 60.0}, {220.0, 180.0, 140.0}};
  return p;
}

TEST(ClipParams, ProjectsEveryFieldOntoItsBound) {
  PatternParams p;
  p.width_frac = 0.9;
  p.angle = 4.0;
  p.colors = {{300.0, -5.0, 128.0}, {1.0, 2.0, 3.0}};
  p.phase = 7.25;
  const PatternParams q = clip_params(p);
  EXPECT_EQ(q.width_frac, 0.5);
  EXPECT_EQ(q.angle, kPi);
  EXPECT_EQ(q.colors[0], (Color{255.0, 0.0, 128.0}));
  EXPECT_EQ(q.colors[1], p.colors[1]);
  EXPECT_EQ(q.phase, 7.25);
  EXPECT_EQ(q.family, p.family);
  EXPECT_EQ(q.mode, p.mode);
}

TEST(ClipParams, MinimumWidthIsOneSixteenth) {
  PatternParams p;
  p.width_frac = 0.01;
  EXPECT_EQ(clip_params(p).width_frac, 0.0625);
}

TEST(ClipParams, InRangeIsIdentityAndIdempotent) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    PatternParams p = sample_random_params(rng, i % 2 ? Family::kStripes : Family::kChevrons,
                                           Mode::kUnconstrained);
    EXPECT_EQ(clip_params(p), p);
    p.width_frac = uniform(rng, -1.0, 2.0);
    p.angle = uniform(rng, -5.0, 8.0);
    p.colors[0][1] = uniform(rng, -400.0, 700.0);
    const PatternParams once = clip_params(p);
    EXPECT_EQ(clip_params(once), once);
    EXPECT_TRUE(within_bounds(once));
  }
}

TEST(Palette, WorkedExampleStaysPut) {
  const Palette pal{{{0.0, 0.0, 0.0}, {98.0, 104.0, 100.0}}, 4.0};
  EXPECT_EQ(nearest_reference({100.0, 100.0, 100.0}, pal), 1u);
  // Box around (98,104,100) is [94,102]x[100,108]x[96,104].
  EXPECT_EQ(project_to_palette({{100.0, 100.0, 100.0}}, pal)[0], (Color{100.0, 100.0, 100.0}));
}

TEST(Palette, SingleReferenceForcesTheBoxCorner) {
  const Palette pal{{{0.0, 0.0, 0.0}}, 4.0};
  EXPECT_EQ(project_to_palette({{255.0, 255.0, 255.0}}, pal)[0], (Color{4.0, 4.0, 4.0}));
}

TEST(Palette, ReferenceColorIsAFixedPoint) {
  const Palette pal{{{10.0, 20.0, 30.0}, {200.0, 150.0, 100.0}}, 4.0};
  for (const Color& c : pal.reference_colors) EXPECT_EQ(project_to_palette({c}, pal)[0], c);
}

TEST(Palette, TiesGoToTheLowestIndex) {
  const Palette pal{{{0.0, 0.0, 0.0}, {20.0, 0.0, 0.0}}, 2.0};
  EXPECT_EQ(nearest_reference({10.0, 0.0, 0.0}, pal), 0u);
  EXPECT_EQ(project_to_palette({{10.0, 0.0, 0.0}}, pal)[0], (Color{2.0, 0.0, 0.0}));
}

TEST(Palette, EmptyPaletteIsAConfigError) {
  EXPECT_THROW(project_to_palette({{1.0, 2.0, 3.0}}, Palette{}), ConfigError);
  EXPECT_THROW(validate(Palette{{{0.0, 0.0, 300.0}}, 4.0}), ConfigError);
  EXPECT_THROW(validate(Palette{{{0.0, 0.0, 0.0}}, -1.0}), ConfigError);
}

TEST(Palette, ProjectionIsAlwaysWithinTolerance) {
  Rng rng(5);
  const Palette pal{{{224, 172, 105}, {141, 85, 36}, {255, 219, 172}}, 4.0};
  for (int i = 0; i < 1000; ++i) {
    Color c{uniform(rng, 0, 255), uniform(rng, 0, 255), uniform(rng, 0, 255)};
    const Color q = project_to_palette({c}, pal)[0];
    const Color& ref = pal.reference_colors[nearest_reference(c, pal)];
    for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(q[k] - ref[k]), 4.0);
  }
}

TEST(Rasterize, AngleZeroGivesConstantColumns) {
  const PatternImage img = rasterize(two_tone(Family::kStripes, 0.25, 0.0), 64, 64);
  for (int x = 0; x < 64; ++x)
    for (int y = 1; y < 64; ++y)
      for (int c = 0; c < 3; ++c) ASSERT_EQ(img.pixels.at(y, x, c), img.pixels.at(0, x, c));
  EXPECT_NEAR(test::measured_band_period(img.pixels, 0.0), 16.0, 1.0);
}

TEST(Rasterize, AnglePiAlsoGivesConstantColumns) {
  const PatternImage img = rasterize(two_tone(Family::kStripes, 0.25, kPi), 64, 64);
  for (int x = 0; x < 64; ++x)
    for (int y = 1; y < 64; ++y) ASSERT_NEAR(img.pixels.at(y, x, 0), img.pixels.at(0, x, 0), 1e-9);
}

TEST(Rasterize, HalfPiGivesConstantRows) {
  const PatternImage img = rasterize(two_tone(Family::kStripes, 0.25, kPi / 2), 64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 1; x < 64; ++x) ASSERT_NEAR(img.pixels.at(y, x, 1), img.pixels.at(y, 0, 1), 1e-9);
  EXPECT_NEAR(test::measured_band_period(img.pixels, kPi / 2), 16.0, 1.0);
}

TEST(Rasterize, ChevronsAreMirrorSymmetric) {
  const PatternImage img = rasterize(two_tone(Family::kChevrons, 0.2, kPi, 0.3), 64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c) ASSERT_EQ(img.pixels.at(y, x, c), img.pixels.at(y, 63 - x, c));
}

TEST(Rasterize, ChevronArmsMeetAtHalfTheAngle) {
  // At angle pi the arm normals are (+-cos(pi/4), sin(pi/4)), so each arm runs
  // at 45 degrees to the fold axis.
  const PatternImage img = rasterize(two_tone(Family::kChevrons, 0.25, kPi), 128, 128);
  const double right = test::measured_band_period(img.pixels, kPi / 4);
  EXPECT_NEAR(right, 0.25 * 128, 1.0);
}

TEST(Rasterize, PixelsStayInTheConvexHullOfTheColors) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const PatternParams p = sample_random_params(rng, i % 2 ? Family::kStripes : Family::kChevrons,
                                                 Mode::kUnconstrained, nullptr, 3);
    const PatternImage img = rasterize(p, 48, 48, 0.5 + i * 0.2);
    for (int c = 0; c < 3; ++c) {
      double lo = 255.0, hi = 0.0;
      for (const Color& col : p.colors) {
        lo = std::min(lo, col[c]);
        hi = std::max(hi, col[c]);
      }
      for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
          ASSERT_GE(img.pixels.at(y, x, c), lo - 1e-9);
          ASSERT_LE(img.pixels.at(y, x, c), hi + 1e-9);
        }
    }
  }
}

TEST(Rasterize, ConvergesToHardBandsAsSoftnessVanishes) {
  const PatternParams p = two_tone(Family::kStripes, 0.2, 0.7, 0.13);
  const int n = 80;
  const PatternImage soft = rasterize(p, n, n, 1e-3);
  const double band = p.width_frac * n;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double s = ((x + 0.5) - 0.5 * n) * std::cos(p.angle) + ((y + 0.5) - 0.5 * n) * std::sin(p.angle);
      const double z = s / band + 2.0 * p.phase;
      if (std::abs(z - std::round(z)) * band < 0.01) continue;
      const long long idx = static_cast<long long>(std::floor(z));
      const Color& expect = p.colors[((idx % 2) + 2) % 2];
      for (int c = 0; c < 3; ++c) ASSERT_EQ(soft.pixels.at(y, x, c), expect[c]) << y << "," << x;
    }
}

TEST(Rasterize, RotatingTheCanvasShiftsTheAngle) {
  // Rotating the canvas by 90 degrees about its centre maps angle a to a + pi/2.
  const int n = 64;
  for (double a : {0.2, 0.9, 1.3}) {
    const PatternImage base = rasterize(two_tone(Family::kStripes, 0.2, a, 0.1), n, n);
    const PatternImage turned = rasterize(two_tone(Family::kStripes, 0.2, a + kPi / 2, 0.1), n, n);
    for (int y = 8; y < n - 8; ++y)
      for (int x = 8; x < n - 8; ++x)
        // (x, y) relative to the centre rotates to (-y, x).
        ASSERT_NEAR(turned.pixels.at(x, n - 1 - y, 0), base.pixels.at(y, x, 0), 1e-6);
  }
}

TEST(Rasterize, SmallRotationsMatchOnInteriorCrops) {
  const int n = 96;
  const double delta = 0.3;
  for (double softness : {1.5, 3.0}) {
    const PatternParams p = two_tone(Family::kStripes, 0.2, 0.5, 0.1);
    PatternParams q = p;
    q.angle += delta;
    const PatternImage base = rasterize(p, n, n, softness);
    const PatternImage turned = rasterize(q, n, n, softness);
    const double jump = p.colors[1][0] - p.colors[0][0];
    double worst = 0.0;
    for (int y = 20; y < n - 20; ++y)
      for (int x = 20; x < n - 20; ++x) {
        const double dx = x + 0.5 - 0.5 * n, dy = y + 0.5 - 0.5 * n;
        const double bx = dx * std::cos(delta) + dy * std::sin(delta);
        const double by = -dx * std::sin(delta) + dy * std::cos(delta);
        const double v = sample_bilinear(base.pixels, bx + 0.5 * n, by + 0.5 * n, 0);
        worst = std::max(worst, std::abs(v - turned.pixels.at(y, x, 0)) / jump);
      }
    // Bilinear error bound: max|ramp''| / 8 = 5.78 / 8 per jump, over softness^2.
    EXPECT_LT(worst, 0.75 / (softness * softness)) << "softness " << softness;
  }
}

TEST(Rasterize, RejectsNonPositiveSoftness) {
  EXPECT_THROW(rasterize(PatternParams{}, 32, 32, 0.0), ConfigError);
  EXPECT_THROW(rasterize(PatternParams{}, 32, 32, -1.0), ConfigError);
}

double mean_intensity(const PatternParams& p, int n) {
  const PatternImage img = rasterize(p, n, n);
  double s = 0.0;
  for (double v : img.pixels.data()) s += v;
  return s / static_cast<double>(img.pixels.size());
}

TEST(RasterizeBackward, MatchesFiniteDifferencesOfMeanIntensity) {
  const int n = 48;
  Rng rng(21);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    PatternParams p = sample_random_params(rng, trial % 2 ? Family::kStripes : Family::kChevrons,
                                           Mode::kUnconstrained);
    // Keep away from the box edges so central differences stay inside.
    p.width_frac = uniform(rng, 0.1, 0.45);
    p.angle = uniform(rng, 0.2, kPi - 0.2);
    p.phase = uniform(rng, 0.0, 1.0);
    for (Color& c : p.colors)
      for (double& v : c) v = uniform(rng, 20.0, 235.0);

    const Image upstream(n, n, 3, 1.0 / (n * n * 3));
    const ParamGradient g = rasterize_backward(p, upstream);

    // Richardson-refined central differences at step 1e-3 * range.
    auto fd = [&](auto&& field, double range) {
      auto central = [&](double h) {
        PatternParams hi = p, lo = p;
        field(hi) += h;
        field(lo) -= h;
        return (mean_intensity(hi, n) - mean_intensity(lo, n)) / (2.0 * h);
      };
      const double h = 1e-3 * range;
      return (4.0 * central(0.5 * h) - central(h)) / 3.0;
    };
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
    };
    EXPECT_LT(rel(g.width_frac, fd([](PatternParams& q) -> double& { return q.width_frac; }, 0.4375)), 1e-2);
    EXPECT_LT(rel(g.angle, fd([](PatternParams& q) -> double& { return q.angle; }, kPi)), 1e-2);
    EXPECT_LT(rel(g.phase, fd([](PatternParams& q) -> double& { return q.phase; }, 1.0)), 1e-2);
    for (std::size_t k = 0; k < p.colors.size(); ++k)
      for (int c = 0; c < 3; ++c)
        EXPECT_LT(rel(g.colors[k][c],
                      fd([k, c](PatternParams& q) -> double& { return q.colors[k][c]; }, 255.0)),
                  1e-2);
    ++checked;
  }
  EXPECT_EQ(checked, 20);
}

TEST(SampleRandomParams, SameSeedSameParams) {
  Rng a(99), b(99);
  EXPECT_EQ(sample_random_params(a, Family::kChevrons, Mode::kUnconstrained),
            sample_random_params(b, Family::kChevrons, Mode::kUnconstrained));
}

TEST(SampleRandomParams, ConstrainedColorsLieInThePalette) {
  const Palette pal{{{224, 172, 105}, {141, 85, 36}}, 4.0};
  Rng rng(4);
  for (int i = 0; i < 100; ++i)
    EXPECT_TRUE(within_palette(sample_random_params(rng, Family::kStripes, Mode::kConstrained, &pal).colors, pal));
}

TEST(SampleRandomParams, ConstrainedWithoutPaletteIsAConfigError) {
  Rng rng(1);
  EXPECT_THROW(sample_random_params(rng, Family::kStripes, Mode::kConstrained), ConfigError);
}

TEST(SampleRandomParams, WidthIsUniformOverItsRange) {
  Rng rng(2024);
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += sample_random_params(rng, Family::kStripes, Mode::kUnconstrained).width_frac;
  EXPECT_NEAR(sum / n, 0.28125, 0.01);
}

TEST(PerturbParams, ZeroDeltasReturnTheInput) {
  Rng rng(8), src(9);
  for (int i = 0; i < 50; ++i) {
    const PatternParams p = sample_random_params(src, Family::kStripes, Mode::kUnconstrained);
    EXPECT_EQ(perturb_params(p, 0.0, 0.0, 0.0, 112, rng), p);
  }
}

TEST(PerturbParams, ColorChangeIsBounded) {
  Rng rng(8);
  PatternParams p;
  p.colors = {{100, 100, 100}, {50, 150, 200}};
  for (int i = 0; i < 500; ++i) {
    const PatternParams q = perturb_params(p, 4.0, 0.0, 0.0, 112, rng);
    for (std::size_t k = 0; k < p.colors.size(); ++k)
      for (int c = 0; c < 3; ++c) EXPECT_LE(std::abs(q.colors[k][c] - p.colors[k][c]), 4.0);
  }
}

TEST(PerturbParams, AngleAtZeroStaysWithinTwoDegrees) {
  Rng rng(8);
  PatternParams p;
  p.angle = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double a = perturb_params(p, 0.0, 0.0, 2.0, 112, rng).angle;
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 2.0 * kPi / 180.0);
  }
}

TEST(PerturbParams, WidthDeltaIsInCanvasPixels) {
  Rng rng(8);
  PatternParams p;
  p.width_frac = 0.25;
  for (int i = 0; i < 500; ++i)
    EXPECT_LE(std::abs(perturb_params(p, 0.0, 5.0, 0.0, 112, rng).width_frac - 0.25) * 112, 5.0 + 1e-9);
}

}  // namespace
}  // namespace facecamo
