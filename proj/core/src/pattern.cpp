#include "facecamo/pattern.hpp"

#include <algorithm>
#include <cmath>

#include "facecamo/errors.hpp"

namespace facecamo {

std::string_view to_string(Family f) { return f == Family::kStripes ? "stripes" : "chevrons"; }

std::string_view to_string(Mode m) {
  return m == Mode::kConstrained ? "constrained" : "unconstrained";
}

Family parse_family(std::string_view s) {
  if (s == "stripes") return Family::kStripes;
  if (s == "chevrons") return Family::kChevrons;
  throw ConfigError("unknown pattern family '" + std::string(s) + "'");
}

Mode parse_mode(std::string_view s) {
  if (s == "constrained") return Mode::kConstrained;
  if (s == "unconstrained") return Mode::kUnconstrained;
  throw ConfigError("unknown generator mode '" + std::string(s) + "'");
}

void validate(const Palette& pal) {
  if (pal.reference_colors.empty()) throw ConfigError("palette has no reference colors");
  if (!(pal.tolerance >= 0.0) || pal.tolerance > 255.0)
    throw ConfigError("palette tolerance must lie in [0, 255]");
  for (const Color& c : pal.reference_colors)
    for (double v : c)
      if (!(v >= kMinChannel && v <= kMaxChannel))
        throw ConfigError("palette reference channel outside [0, 255]");
}

PatternParams clip_params(PatternParams p) {
  p.width_frac = std::min(std::max(kMinWidthFrac, p.width_frac), kMaxWidthFrac);
  p.angle = std::min(std::max(kMinAngle, p.angle), kMaxAngle);
  for (Color& c : p.colors)
    for (double& v : c) v = std::min(std::max(kMinChannel, v), kMaxChannel);
  return p;
}

std::size_t nearest_reference(const Color& color, const Palette& pal) {
  std::size_t best = 0;
  double best_d2 = INFINITY;
  for (std::size_t k = 0; k < pal.reference_colors.size(); ++k) {
    const Color& ref = pal.reference_colors[k];
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) d2 += (color[c] - ref[c]) * (color[c] - ref[c]);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  return best;
}

std::vector<Color> project_to_palette(const std::vector<Color>& colors, const Palette& pal) {
  validate(pal);
  std::vector<Color> out;
  out.reserve(colors.size());
  for (const Color& color : colors) {
    const Color& ref = pal.reference_colors[nearest_reference(color, pal)];
    Color snapped;
    for (int c = 0; c < 3; ++c)
      snapped[c] = std::min(std::max(ref[c] - pal.tolerance, color[c]), ref[c] + pal.tolerance);
    out.push_back(snapped);
  }
  return out;
}

namespace {

// Quintic smoothstep on [0, 1] and its derivative.
double ramp(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

double ramp_deriv(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 30.0 * u * u * (u - 1.0) * (u - 1.0);
}

long long positive_mod(long long n, long long k) {
  const long long r = n % k;
  return r < 0 ? r + k : r;
}

// Per-pixel geometry shared by the forward and backward passes.
struct BandGeometry {
  double s;        // signed distance along the band normal, pixels
  double ds_da;    // derivative of s w.r.t. angle
  long long first; // lowest boundary index with a non-saturated contribution
  long long last;
};

struct Raster {
  const PatternParams& p;
  int height, width;
  double softness;
  double band_px;   // width_frac * width
  int k;            // colour count
  double cos_a, sin_a;

  Raster(const PatternParams& params, int h, int w, double tau)
      : p(params), height(h), width(w), softness(tau),
        band_px(params.width_frac * w), k(static_cast<int>(params.colors.size())) {
    const double theta = p.family == Family::kStripes ? p.angle : p.angle / 4.0;
    cos_a = std::cos(theta);
    sin_a = std::sin(theta);
  }

  BandGeometry geometry(int y, int x) const {
    const double dx = (x + 0.5) - 0.5 * width;
    const double dy = (y + 0.5) - 0.5 * height;
    BandGeometry g{};
    if (p.family == Family::kStripes) {
      g.s = dx * cos_a + dy * sin_a;
      g.ds_da = -dx * sin_a + dy * cos_a;
    } else {
      // Fold about the vertical centre line; arms meet at angle/2.
      const double ax = std::abs(dx);
      g.s = ax * cos_a + dy * sin_a;
      g.ds_da = 0.25 * (-ax * sin_a + dy * cos_a);
    }
    const double z = g.s / band_px + k * p.phase;
    const double reach = 0.5 * softness / band_px;
    g.first = static_cast<long long>(std::floor(z - reach)) - 1;
    g.last = static_cast<long long>(std::ceil(z + reach)) + 1;
    return g;
  }

  // Signed pixel distance from boundary n.
  double boundary_distance(const BandGeometry& g, long long n) const {
    return g.s + (k * p.phase - static_cast<double>(n)) * band_px;
  }

  double step(double d) const { return ramp(d / softness + 0.5); }
  double step_deriv(double d) const { return ramp_deriv(d / softness + 0.5) / softness; }

  const Color& color(long long n) const { return p.colors[positive_mod(n, k)]; }
};

void check_raster_args(const PatternParams& p, int height, int width, double softness) {
  if (!(softness > 0.0)) throw ConfigError("rasterize: softness must be positive");
  if (height < 16 || width < 16) throw ConfigError("rasterize: canvas must be at least 16x16");
  if (p.colors.size() < 2) throw ConfigError("rasterize: at least two colors are required");
  if (!(p.width_frac > 0.0)) throw ConfigError("rasterize: width_frac must be positive");
}

}  // namespace

PatternImage rasterize(const PatternParams& p, int height, int width, double softness) {
  check_raster_args(p, height, width, softness);
  const Raster r(p, height, width, softness);
  PatternImage out{Image(height, width, 3), softness, p};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const BandGeometry g = r.geometry(y, x);
      // p = c_first + sum_{n > first} (c_n - c_{n-1}) S(d_n); S(d_first) == 1.
      Color acc = r.color(g.first);
      for (long long n = g.first + 1; n < g.last; ++n) {
        const double sn = r.step(r.boundary_distance(g, n));
        if (sn == 0.0) continue;
        const Color& cn = r.color(n);
        const Color& cp = r.color(n - 1);
        for (int c = 0; c < 3; ++c) acc[c] += (cn[c] - cp[c]) * sn;
      }
      for (int c = 0; c < 3; ++c) out.pixels.at(y, x, c) = std::clamp(acc[c], 0.0, 255.0);
    }
  }
  return out;
}

ParamGradient rasterize_backward(const PatternParams& p, const Image& upstream, double softness) {
  const int height = upstream.height();
  const int width = upstream.width();
  check_raster_args(p, height, width, softness);
  if (upstream.channels() != 3) throw ContractError("rasterize_backward: upstream must have 3 channels");
  const Raster r(p, height, width, softness);
  const int k = r.k;

  ParamGradient grad;
  grad.colors.assign(p.colors.size(), Color{0.0, 0.0, 0.0});
  std::vector<double> s_vals;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double g0 = upstream.at(y, x, 0);
      const double g1 = upstream.at(y, x, 1);
      const double g2 = upstream.at(y, x, 2);
      if (g0 == 0.0 && g1 == 0.0 && g2 == 0.0) continue;
      const BandGeometry g = r.geometry(y, x);

      s_vals.assign(static_cast<std::size_t>(g.last - g.first + 1), 0.0);
      for (long long n = g.first; n <= g.last; ++n)
        s_vals[n - g.first] = r.step(r.boundary_distance(g, n));

      // Colour weights: band n has weight S(d_n) - S(d_{n+1}).
      for (long long n = g.first; n < g.last; ++n) {
        const double w = s_vals[n - g.first] - s_vals[n + 1 - g.first];
        if (w == 0.0) continue;
        Color& gc = grad.colors[positive_mod(n, k)];
        gc[0] += g0 * w;
        gc[1] += g1 * w;
        gc[2] += g2 * w;
      }

      // Geometry: every boundary moves with width, phase and angle.
      for (long long n = g.first + 1; n < g.last; ++n) {
        const double sd = r.step_deriv(r.boundary_distance(g, n));
        if (sd == 0.0) continue;
        const Color& cn = r.color(n);
        const Color& cp = r.color(n - 1);
        const double jump = g0 * (cn[0] - cp[0]) + g1 * (cn[1] - cp[1]) + g2 * (cn[2] - cp[2]);
        const double common = jump * sd;
        grad.width_frac += common * (k * p.phase - static_cast<double>(n)) * width;
        grad.phase += common * k * r.band_px;
        grad.angle += common * g.ds_da;
      }
    }
  }
  return grad;
}

PatternParams sample_random_params(Rng& rng, Family family, Mode mode, const Palette* pal,
                                   int num_colors) {
  if (num_colors < 2) throw ConfigError("pattern needs at least two colors");
  if (mode == Mode::kConstrained && (pal == nullptr || pal->reference_colors.empty()))
    throw ConfigError("constrained mode requires a palette");
  PatternParams p;
  p.family = family;
  p.mode = mode;
  p.width_frac = uniform(rng, kMinWidthFrac, kMaxWidthFrac);
  p.angle = uniform(rng, kMinAngle, kMaxAngle);
  p.phase = 0.0;
  p.colors.assign(static_cast<std::size_t>(num_colors), Color{});
  for (Color& c : p.colors)
    for (double& v : c) v = uniform(rng, kMinChannel, kMaxChannel);
  if (mode == Mode::kConstrained) p.colors = project_to_palette(p.colors, *pal);
  return p;
}

PatternParams perturb_params(const PatternParams& p, double max_color, double max_width_px,
                             double max_angle_deg, int canvas_width, Rng& rng) {
  if (max_color < 0.0 || max_width_px < 0.0 || max_angle_deg < 0.0)
    throw ConfigError("perturbation bounds must be non-negative");
  if (canvas_width <= 0) throw ConfigError("canvas width must be positive");
  PatternParams q = p;
  for (Color& c : q.colors)
    for (double& v : c) v += uniform(rng, -max_color, max_color);
  q.width_frac += uniform(rng, -max_width_px, max_width_px) / canvas_width;
  q.angle += uniform(rng, -max_angle_deg, max_angle_deg) * std::numbers::pi / 180.0;
  return clip_params(std::move(q));
}

bool within_bounds(const PatternParams& p) {
  if (p.colors.size() < 2) return false;
  if (!(p.width_frac >= kMinWidthFrac && p.width_frac <= kMaxWidthFrac)) return false;
  if (!(p.angle >= kMinAngle && p.angle <= kMaxAngle)) return false;
  for (const Color& c : p.colors)
    for (double v : c)
      if (!(v >= kMinChannel && v <= kMaxChannel)) return false;
  return true;
}

bool within_palette(const std::vector<Color>& colors, const Palette& pal) {
  for (const Color& color : colors) {
    const Color& ref = pal.reference_colors[nearest_reference(color, pal)];
    for (int c = 0; c < 3; ++c)
      if (std::abs(color[c] - ref[c]) > pal.tolerance) return false;
  }
  return true;
}

}  // namespace facecamo
