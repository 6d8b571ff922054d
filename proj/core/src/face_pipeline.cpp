#include "facecamo/face_pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "facecamo/errors.hpp"
#include "facecamo/png_io.hpp"

namespace facecamo {

void validate(const FaceSample& s) {
  if (s.image.channels() != 3) throw ContractError("face image must have 3 channels");
  if (s.mask.channels() != 1 || s.mask.height() != s.image.height() ||
      s.mask.width() != s.image.width())
    throw ContractError("face mask dimensions do not match image");
  bool any = false;
  for (double v : s.mask.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("face mask values must lie in [0, 1]");
    any = any || v > 0.0;
  }
  if (!any) throw ContractError("face mask is empty");
}

void validate(const BlendConfig& cfg) {
  const double t = cfg.overlay_threshold;
  if (cfg.force) {
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("forced overlay threshold must lie in [0, 1]");
  } else if (!(t >= 0.3 && t <= 0.5)) {
    throw ConfigError("overlay threshold must lie in [0.3, 0.5] (use force to override)");
  }
}

namespace {

void check_blend_shapes(const FaceSample& sample, const Image& other, const char* what) {
  if (other.height() != sample.image.height() || other.width() != sample.image.width() ||
      other.channels() != 3)
    throw ContractError(std::string("blend: ") + what + " dimensions do not match the face sample");
  if (sample.mask.height() != sample.image.height() || sample.mask.width() != sample.image.width())
    throw ContractError("blend: mask dimensions do not match the face image");
}

}  // namespace

Image blend(const FaceSample& sample, const PatternImage& pattern, const BlendConfig& cfg) {
  validate(cfg);
  check_blend_shapes(sample, pattern.pixels, "pattern");
  const double t = cfg.overlay_threshold;
  Image out(sample.image.height(), sample.image.width(), 3);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const double alpha = t * sample.mask.at(y, x);
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = (1.0 - alpha) * sample.image.at(y, x, c) +
                          alpha * (pattern.pixels.at(y, x, c) / 255.0);
    }
  return out;
}

Image blend_backward_pattern(const FaceSample& sample, const Image& upstream,
                             const BlendConfig& cfg) {
  check_blend_shapes(sample, upstream, "upstream gradient");
  const double t = cfg.overlay_threshold;
  Image out(upstream.height(), upstream.width(), 3);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const double alpha = t * sample.mask.at(y, x) / 255.0;
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = upstream.at(y, x, c) * alpha;
    }
  return out;
}

std::vector<Region> default_regions() { return {Region::kSkin, Region::kNose}; }

Region parse_region(const std::string& name) {
  static const std::pair<const char*, Region> kNames[] = {
      {"background", Region::kBackground}, {"skin", Region::kSkin},
      {"nose", Region::kNose},             {"left_brow", Region::kLeftBrow},
      {"right_brow", Region::kRightBrow},  {"left_eye", Region::kLeftEye},
      {"right_eye", Region::kRightEye},    {"lips", Region::kLips},
      {"hair", Region::kHair},
  };
  for (const auto& [n, r] : kNames)
    if (name == n) return r;
  throw ConfigError("unknown face region '" + name + "'");
}

std::string region_name(Region r) {
  switch (r) {
    case Region::kBackground: return "background";
    case Region::kSkin: return "skin";
    case Region::kNose: return "nose";
    case Region::kLeftBrow: return "left_brow";
    case Region::kRightBrow: return "right_brow";
    case Region::kLeftEye: return "left_eye";
    case Region::kRightEye: return "right_eye";
    case Region::kLips: return "lips";
    case Region::kHair: return "hair";
  }
  return "unknown";
}

Detection FixtureDetector::detect(const RawFace& raw) const {
  if (raw.fixture_detection) return *raw.fixture_detection;
  if (raw.image.empty()) throw DetectionError("no face found in empty image: " + raw.source_path);
  const double w = raw.image.width();
  const double h = raw.image.height();
  Detection d;
  d.left = 0.0;
  d.top = 0.0;
  d.right = w;
  d.bottom = h;
  d.left_eye = {0.35 * w, 0.4 * h};
  d.right_eye = {0.65 * w, 0.4 * h};
  return d;
}

namespace {

Image first_channel(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.at(y, x) = img.at(y, x, 0);
  return out;
}

}  // namespace

std::optional<Image> FixtureParser::parse(const RawFace& raw) const {
  if (!raw.label_map_path) return std::nullopt;
  try {
    return first_channel(read_png(*raw.label_map_path));
  } catch (const DataError& e) {
    throw SegmentationError(std::string("face parsing failed: ") + e.what());
  }
}

std::optional<Image> FixtureParser::precomputed_mask(const RawFace& raw) const {
  if (raw.mask_path) {
    try {
      return first_channel(read_png(*raw.mask_path));
    } catch (const DataError& e) {
      throw SegmentationError(std::string("mask load failed: ") + e.what());
    }
  }
  return Image(raw.image.height(), raw.image.width(), 1, 255.0);
}

Point AlignTransform::to_raw(Point q) const {
  return {a * q.x - b * q.y + tx, b * q.x + a * q.y + ty};
}

Point AlignTransform::to_canonical(Point r) const {
  const double dx = r.x - tx;
  const double dy = r.y - ty;
  const double s2 = a * a + b * b;
  return {(a * dx + b * dy) / s2, (-b * dx + a * dy) / s2};
}

AlignTransform alignment_for(const Detection& det, int canvas) {
  const double bw = det.right - det.left;
  const double bh = det.bottom - det.top;
  if (!(bw > 0.0 && bh > 0.0)) throw DetectionError("degenerate face box");
  const double scale = std::max(bw, bh) / canvas;
  const double theta =
      std::atan2(det.right_eye.y - det.left_eye.y, det.right_eye.x - det.left_eye.x);
  AlignTransform t;
  t.a = scale * std::cos(theta);
  t.b = scale * std::sin(theta);
  // Canvas centre maps onto the box centre.
  const double c = 0.5 * canvas;
  const double bx = 0.5 * (det.left + det.right);
  const double by = 0.5 * (det.top + det.bottom);
  t.tx = bx - (t.a * c - t.b * c);
  t.ty = by - (t.b * c + t.a * c);
  return t;
}

FaceSample preprocess(const RawFace& raw, const FaceDetector& detector, const FaceParser& parser,
                      const PreprocessConfig& cfg, const std::string& identity) {
  if (raw.image.channels() != 3) throw ContractError("preprocess expects an RGB image");
  if (cfg.canvas < 16) throw ConfigError("canvas must be at least 16 pixels");
  const Detection det = detector.detect(raw);
  const AlignTransform tf = alignment_for(det, cfg.canvas);

  FaceSample s;
  s.identity = identity;
  s.source_path = raw.source_path;
  s.image = Image(cfg.canvas, cfg.canvas, 3);
  s.mask = Image(cfg.canvas, cfg.canvas, 1);

  const std::optional<Image> labels = parser.parse(raw);
  std::optional<Image> soft;
  if (!labels) {
    soft = parser.precomputed_mask(raw);
    if (!soft) throw SegmentationError("parser produced neither labels nor a mask: " + raw.source_path);
  }
  const Image& mask_src = labels ? *labels : *soft;
  if (mask_src.height() != raw.image.height() || mask_src.width() != raw.image.width())
    throw SegmentationError("mask dimensions do not match image: " + raw.source_path);

  bool any = false;
  for (int y = 0; y < cfg.canvas; ++y) {
    for (int x = 0; x < cfg.canvas; ++x) {
      const Point p = tf.to_raw({x + 0.5, y + 0.5});
      for (int c = 0; c < 3; ++c)
        s.image.at(y, x, c) = std::clamp(sample_bilinear(raw.image, p.x, p.y, c) / 255.0, 0.0, 1.0);
      double m;
      if (labels) {
        const int code = static_cast<int>(std::lround(sample_nearest(*labels, p.x, p.y, 0)));
        m = std::any_of(cfg.regions.begin(), cfg.regions.end(),
                        [code](Region r) { return static_cast<int>(r) == code; })
                ? 1.0
                : 0.0;
      } else {
        m = std::clamp(sample_bilinear(*soft, p.x, p.y, 0) / 255.0, 0.0, 1.0);
      }
      s.mask.at(y, x) = m;
      any = any || m > 0.0;
    }
  }
  if (!any) throw SegmentationError("no maskable facial region found: " + raw.source_path);
  return s;
}

RawFace load_raw_face(const std::filesystem::path& image_path) {
  Image img = read_png(image_path);
  if (img.channels() == 1) {
    Image rgb(img.height(), img.width(), 3);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = img.at(y, x);
    img = std::move(rgb);
  }
  RawFace raw;
  raw.image = std::move(img);
  raw.source_path = image_path.string();
  return raw;
}

}  // namespace facecamo
