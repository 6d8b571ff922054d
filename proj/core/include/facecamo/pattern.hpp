#pragma once

#include <array>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facecamo/image.hpp"
#include "facecamo/rng.hpp"

namespace facecamo {

enum class Family { kStripes, kChevrons };
enum class Mode { kConstrained, kUnconstrained };

std::string_view to_string(Family f);
std::string_view to_string(Mode m);
Family parse_family(std::string_view s);
Mode parse_mode(std::string_view s);

using Color = std::array<double, 3>;

// Box bounds of the pattern space.
inline constexpr double kMinWidthFrac = 1.0 / 16.0;
inline constexpr double kMaxWidthFrac = 0.5;
inline constexpr double kMinAngle = 0.0;
inline constexpr double kMaxAngle = std::numbers::pi;
inline constexpr double kMinChannel = 0.0;
inline constexpr double kMaxChannel = 255.0;

inline constexpr double kDefaultSoftness = 1.5;
inline constexpr int kDefaultNumColors = 2;

struct PatternParams {
  Family family = Family::kStripes;
  // Band width as a fraction of the canvas width.
  double width_frac = 0.25;
  // Radians. Stripes: 0 and pi give vertical bands, pi/2 horizontal.
  // Chevrons: the arms meet at an interior angle of angle/2.
  double angle = 0.0;
  // K >= 2 colours, cycled band by band.
  std::vector<Color> colors{{0.0, 0.0, 0.0}, {255.0, 255.0, 255.0}};
  // Offset along the band normal, in units of one full colour cycle.
  double phase = 0.0;
  Mode mode = Mode::kUnconstrained;

  friend bool operator==(const PatternParams&, const PatternParams&) = default;
};

struct Palette {
  std::vector<Color> reference_colors;
  double tolerance = 4.0;
};

// Throws ConfigError on empty palette, negative tolerance or out-of-range
// reference channels.
void validate(const Palette& pal);

struct PatternImage {
  Image pixels;  // H x W x 3 in [0, 255]
  double softness = kDefaultSoftness;
  PatternParams source_params;
};

// Gradient of a scalar with respect to every continuous pattern parameter.
struct ParamGradient {
  double width_frac = 0.0;
  double angle = 0.0;
  double phase = 0.0;
  std::vector<Color> colors;
};

// Projects width_frac, angle and every channel onto their box bounds. Phase,
// family and mode pass through unchanged. Total and idempotent.
PatternParams clip_params(PatternParams p);

// Index of the reference colour nearest to `color` in Euclidean distance,
// lowest index on ties.
std::size_t nearest_reference(const Color& color, const Palette& pal);

// Snaps each colour into the tolerance box of its nearest reference colour.
std::vector<Color> project_to_palette(const std::vector<Color>& colors, const Palette& pal);

// Soft-edged rasterization. Every band boundary is a quintic smooth ramp of
// `softness` pixels, so pixels are differentiable in width_frac, angle,
// phase and colours.
PatternImage rasterize(const PatternParams& p, int height, int width,
                       double softness = kDefaultSoftness);

// Vector-Jacobian product of rasterize: given dL/dpixels (H x W x 3), returns
// dL/dparams. `upstream` must have the shape rasterize would produce.
ParamGradient rasterize_backward(const PatternParams& p, const Image& upstream,
                                 double softness = kDefaultSoftness);

PatternParams sample_random_params(Rng& rng, Family family, Mode mode,
                                   const Palette* pal = nullptr,
                                   int num_colors = kDefaultNumColors);

// Neighbourhood perturbation. `max_width_px` is in pixels of a canvas that is
// `canvas_width` wide; `max_angle_deg` is in degrees.
PatternParams perturb_params(const PatternParams& p, double max_color, double max_width_px,
                             double max_angle_deg, int canvas_width, Rng& rng);

bool within_bounds(const PatternParams& p);

// Every colour lies within the tolerance box of its nearest reference.
bool within_palette(const std::vector<Color>& colors, const Palette& pal);

}  // namespace facecamo
