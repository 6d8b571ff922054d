#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "facecamo/image.hpp"
#include "facecamo/pattern.hpp"

namespace facecamo {

inline constexpr int kCanonicalCanvas = 112;

struct FaceSample {
  std::string identity;
  Image image;  // H x W x 3 in [0, 1]
  Image mask;   // H x W x 1 in [0, 1]
  std::string source_path;
};

// Throws ContractError when image/mask shapes disagree, the mask leaves
// [0, 1] or is empty.
void validate(const FaceSample& s);

struct BlendConfig {
  double overlay_threshold = 0.4;
  // Allows overlay_threshold outside [0.3, 0.5] (including 0 and 1).
  bool force = false;
};

void validate(const BlendConfig& cfg);

// out = (1 - t*mask) * image + t*mask * pattern / 255, per pixel.
Image blend(const FaceSample& sample, const PatternImage& pattern, const BlendConfig& cfg);

// dL/dpattern given dL/dblended. Linear in the upstream gradient.
Image blend_backward_pattern(const FaceSample& sample, const Image& upstream,
                             const BlendConfig& cfg);

// Face parsing labels. Values are what the bundled label-map PNGs store.
enum class Region : int {
  kBackground = 0,
  kSkin = 1,
  kNose = 2,
  kLeftBrow = 3,
  kRightBrow = 4,
  kLeftEye = 5,
  kRightEye = 6,
  kLips = 7,
  kHair = 8,
};

std::vector<Region> default_regions();
Region parse_region(const std::string& name);
std::string region_name(Region r);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Detection {
  // Axis-aligned face box in raw-image pixel coordinates.
  double left = 0.0, top = 0.0, right = 0.0, bottom = 0.0;
  Point left_eye;   // eye on the image left
  Point right_eye;
};

// A raw image as handed to preprocessing, plus whatever side information a
// fixture provider needs (landmarks, label maps). Real detectors ignore the
// side information.
struct RawFace {
  Image image;  // H x W x 3 in [0, 255]
  std::string source_path;
  std::optional<Detection> fixture_detection;
  std::optional<std::filesystem::path> label_map_path;
  std::optional<std::filesystem::path> mask_path;
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  // Exactly one face; throws DetectionError on zero or several.
  virtual Detection detect(const RawFace& raw) const = 0;
  virtual bool concurrency_safe() const { return true; }
};

class FaceParser {
 public:
  virtual ~FaceParser() = default;
  // Per-pixel label map (H x W x 1, integer-valued Region codes) in the raw
  // image frame, or nullopt when the provider only has a precomputed mask.
  virtual std::optional<Image> parse(const RawFace& raw) const = 0;
  // Precomputed soft mask in the raw frame; used when parse() has no labels.
  virtual std::optional<Image> precomputed_mask(const RawFace& raw) const = 0;
  virtual bool concurrency_safe() const { return true; }
};

// Reads the detection stored alongside the image. Without one, the whole
// image is taken as an already aligned face.
class FixtureDetector final : public FaceDetector {
 public:
  Detection detect(const RawFace& raw) const override;
};

// Reads label maps / masks from disk. With neither on disk, the parser
// returns a full-face mask.
class FixtureParser final : public FaceParser {
 public:
  std::optional<Image> parse(const RawFace& raw) const override;
  std::optional<Image> precomputed_mask(const RawFace& raw) const override;
};

struct PreprocessConfig {
  int canvas = kCanonicalCanvas;
  std::vector<Region> regions = default_regions();
};

// Similarity transform from canonical canvas coordinates to raw-image
// coordinates: raw = scale * R(theta) * canonical + offset.
struct AlignTransform {
  double a = 1.0, b = 0.0;  // [a -b; b a] = scale * rotation
  double tx = 0.0, ty = 0.0;

  Point to_raw(Point canonical) const;
  Point to_canonical(Point raw) const;
};

// Crop to the detection box, rotate about the box centre so the eye line is
// horizontal, and scale the longer box side to the canvas.
AlignTransform alignment_for(const Detection& det, int canvas);

FaceSample preprocess(const RawFace& raw, const FaceDetector& detector, const FaceParser& parser,
                      const PreprocessConfig& cfg, const std::string& identity);

// Loads an image file as a RawFace.
RawFace load_raw_face(const std::filesystem::path& image_path);

}  // namespace facecamo
