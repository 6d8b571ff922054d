#include "facecamo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "facecamo/dataset.hpp"
#include "facecamo/png_io.hpp"

namespace facecamo {

namespace {

Color lerp(const Color& a, const Color& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

Color jitter_color(Rng& rng, Color c, double amount) {
  for (double& v : c) v = std::clamp(v + uniform(rng, -amount, amount), 0.0, 255.0);
  return c;
}

Color scale_color(const Color& c, double s) { return {c[0] * s, c[1] * s, c[2] * s}; }

double sq(double v) { return v * v; }

struct Shade {
  Region label;
  Color color;
};

Shade shade_at(const FaceAttributes& a, const FacePose& pose, double u, double v) {
  const double r = a.eye_radius;
  for (int side = -1; side <= 1; side += 2) {
    const double ex = side * a.eye_spacing;
    const double e = sq((u - ex) / r) + sq((v - a.eye_y) / (0.65 * r));
    if (e < 1.0) {
      const Region lbl = side < 0 ? Region::kLeftEye : Region::kRightEye;
      const double rr = std::sqrt(sq(u - ex) + sq(v - a.eye_y));
      if (rr < 0.22 * r) return {lbl, {15, 15, 20}};
      if (rr < 0.55 * r) return {lbl, a.iris};
      return {lbl, {235, 235, 230}};
    }
    const double by = a.eye_y - a.brow_gap;
    if (sq((u - ex) / (1.35 * r)) + sq((v - by) / a.brow_thickness) < 1.0)
      return {side < 0 ? Region::kLeftBrow : Region::kRightBrow, scale_color(a.hair, 0.75)};
  }
  const double lip_h = 0.055 + 0.05 * pose.mouth_open;
  const double lip = sq(u / a.mouth_half_width) + sq((v - a.mouth_y) / lip_h);
  if (lip < 1.0) {
    if (pose.mouth_open > 0.3 && lip < 0.35) return {Region::kLips, {60, 20, 25}};
    return {Region::kLips, a.lips};
  }

  const double face = sq(u / a.face_half_width) + sq(v / a.face_half_height);
  const double hairline = a.hairline + 0.04 * std::cos(6.0 * u);
  if (face < 1.0 && v >= hairline) {
    const double nose_top = a.eye_y + 0.06;
    const double t = (v - nose_top) / a.nose_length;
    Color base = a.skin;
    for (int side = -1; side <= 1; side += 2) {
      const double g = std::exp(-(sq(u - side * (a.eye_spacing + 0.05)) + sq(v - (a.eye_y + 0.32))) /
                                (2.0 * sq(0.12)));
      base = lerp(base, a.blush, a.blush_strength * g);
    }
    for (const Point& m : a.marks)
      if (sq(u - m.x) + sq(v - m.y) < sq(0.035)) base = {95, 60, 45};
    if (t >= 0.0 && t <= 1.0 && std::abs(u) < 0.02 + a.nose_width * t) {
      const double edge = std::abs(u) / (0.02 + a.nose_width * t);
      return {Region::kNose, scale_color(base, 0.93 - 0.08 * edge)};
    }
    return {Region::kSkin, base};
  }
  const double hair = sq(u / (a.face_half_width + 0.13)) + sq((v + 0.08) / (a.face_half_height + 0.1));
  if (hair < 1.0 && v < 0.15) return {Region::kHair, a.hair};
  return {Region::kBackground, pose.background};
}

}  // namespace

FaceAttributes random_identity(Rng& rng) {
  FaceAttributes a;
  a.skin = jitter_color(rng, lerp({236, 204, 178}, {112, 76, 56}, uniform(rng, 0.0, 1.0)), 12.0);
  static const Color kHair[] = {{25, 20, 18}, {70, 45, 30}, {120, 80, 45}, {200, 165, 100},
                                {150, 60, 35}, {140, 140, 140}};
  a.hair = jitter_color(rng, kHair[uniform_index(rng, 6)], 18.0);
  static const Color kIris[] = {{60, 90, 150}, {70, 120, 80}, {90, 60, 35}, {110, 115, 120}};
  a.iris = jitter_color(rng, kIris[uniform_index(rng, 4)], 15.0);
  a.lips = {uniform(rng, 140, 205), uniform(rng, 55, 100), uniform(rng, 65, 110)};
  a.blush = lerp(a.skin, {225, 95, 95}, uniform(rng, 0.3, 0.8));
  a.blush_strength = uniform(rng, 0.0, 0.6);
  a.face_half_width = uniform(rng, 0.6, 0.8);
  a.face_half_height = uniform(rng, 0.8, 0.95);
  a.hairline = uniform(rng, -0.78, -0.45);
  a.eye_y = uniform(rng, -0.26, -0.1);
  a.eye_spacing = uniform(rng, 0.25, 0.38);
  a.eye_radius = uniform(rng, 0.07, 0.11);
  a.brow_gap = uniform(rng, 0.11, 0.18);
  a.brow_thickness = uniform(rng, 0.025, 0.055);
  a.nose_length = uniform(rng, 0.22, 0.36);
  a.nose_width = uniform(rng, 0.08, 0.15);
  a.mouth_y = uniform(rng, 0.4, 0.56);
  a.mouth_half_width = uniform(rng, 0.17, 0.3);
  const int marks = static_cast<int>(uniform_index(rng, 4));
  for (int i = 0; i < marks; ++i) a.marks.push_back({uniform(rng, -0.5, 0.5), uniform(rng, -0.4, 0.35)});
  return a;
}

FacePose random_pose(Rng& rng, int size, double max_roll_deg) {
  FacePose p;
  p.center_x = 0.5 * size + uniform(rng, -4.0, 4.0);
  p.center_y = 0.5 * size + uniform(rng, -4.0, 4.0);
  p.radius = size * uniform(rng, 0.36, 0.4);
  p.roll_deg = uniform(rng, -max_roll_deg, max_roll_deg);
  p.gain = uniform(rng, 0.85, 1.15);
  p.light_slope = uniform(rng, -0.15, 0.15);
  p.background = {uniform(rng, 40, 220), uniform(rng, 40, 220), uniform(rng, 40, 220)};
  p.mouth_open = uniform(rng, 0.0, 1.0) < 0.3 ? uniform(rng, 0.3, 1.0) : 0.0;
  p.noise_sigma = 2.0;
  return p;
}

RenderedFace render_face(const FaceAttributes& attrs, const FacePose& pose, int size, Rng& noise_rng) {
  RenderedFace out;
  out.image = Image(size, size, 3);
  out.labels = Image(size, size, 1);
  const double th = pose.roll_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(th), st = std::sin(th);
  auto to_local = [&](double x, double y) {
    const double dx = x - pose.center_x, dy = y - pose.center_y;
    // Inverse rotation, then scale to face units.
    return Point{(ct * dx + st * dy) / pose.radius, (-st * dx + ct * dy) / pose.radius};
  };
  auto to_raw = [&](Point l) {
    return Point{pose.center_x + pose.radius * (ct * l.x - st * l.y),
                 pose.center_y + pose.radius * (st * l.x + ct * l.y)};
  };
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      Color acc{0, 0, 0};
      for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx) {
          const Point l = to_local(x + 0.25 + 0.5 * sx, y + 0.25 + 0.5 * sy);
          Shade s = shade_at(attrs, pose, l.x, l.y);
          if (s.label != Region::kBackground) s.color = scale_color(s.color, pose.gain * (1.0 + pose.light_slope * l.x));
          for (int c = 0; c < 3; ++c) acc[c] += 0.25 * s.color[c];
        }
      const Point lc = to_local(x + 0.5, y + 0.5);
      out.labels.at(y, x) = static_cast<double>(shade_at(attrs, pose, lc.x, lc.y).label);
      for (int c = 0; c < 3; ++c)
        out.image.at(y, x, c) =
            std::clamp(std::round(acc[c] + pose.noise_sigma * standard_normal(noise_rng)), 0.0, 255.0);
    }
  }
  Detection& d = out.detection;
  const double half = 1.1 * pose.radius;
  d.left = pose.center_x - half;
  d.top = pose.center_y - half;
  d.right = pose.center_x + half;
  d.bottom = pose.center_y + half;
  d.left_eye = to_raw({-attrs.eye_spacing, attrs.eye_y});
  d.right_eye = to_raw({attrs.eye_spacing, attrs.eye_y});
  return out;
}

std::filesystem::path generate_toy_dataset(const std::filesystem::path& dir,
                                           const ToyDatasetOptions& opt) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "labels");
  std::filesystem::create_directories(dir / "masks");
  std::vector<DatasetRecord> records;
  for (int id = 0; id < opt.identities; ++id) {
    Rng id_rng(derive_seed(opt.seed, static_cast<std::uint64_t>(id)));
    const FaceAttributes attrs = random_identity(id_rng);
    char ident[32];
    std::snprintf(ident, sizeof(ident), "id%03d", id);
    const int total = opt.train_per_identity + opt.eval_per_identity;
    for (int k = 0; k < total; ++k) {
      const FacePose pose = random_pose(id_rng, opt.image_size, opt.max_roll_deg);
      const RenderedFace face = render_face(attrs, pose, opt.image_size, id_rng);
      char stem[48];
      std::snprintf(stem, sizeof(stem), "%s_%02d.png", ident, k);
      write_png(dir / "images" / stem, face.image);
      write_png(dir / "labels" / stem, face.labels);
      Image mask(face.labels.height(), face.labels.width(), 1);
      for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
          const int code = static_cast<int>(face.labels.at(y, x));
          mask.at(y, x) = (code == static_cast<int>(Region::kSkin) || code == static_cast<int>(Region::kNose)) ? 255.0 : 0.0;
        }
      write_png(dir / "masks" / stem, mask);
      DatasetRecord r;
      r.image = std::string("images/") + stem;
      r.labels = std::string("labels/") + stem;
      r.mask = std::string("masks/") + stem;
      r.identity = ident;
      r.detection = face.detection;
      r.split = k < opt.train_per_identity ? "train" : "eval";
      records.push_back(std::move(r));
    }
  }
  const auto manifest = dir / "manifest.jsonl";
  write_dataset_manifest(manifest, records);
  return manifest;
}

}  // namespace facecamo
