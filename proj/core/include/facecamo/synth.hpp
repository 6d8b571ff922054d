#pragma once

#include <cstdint>
#include <filesystem>

#include "facecamo/face_pipeline.hpp"
#include "facecamo/pattern.hpp"
#include "facecamo/rng.hpp"

namespace facecamo {

// Identity-level appearance of a procedurally drawn face. Lengths are in
// face units: the face ellipse spans roughly [-1, 1] on both axes.
struct FaceAttributes {
  Color skin{200, 160, 130};
  Color hair{60, 40, 30};
  Color iris{70, 50, 40};
  Color lips{170, 80, 80};
  Color blush{220, 120, 120};
  double face_half_width = 0.72;
  double face_half_height = 0.9;
  double hairline = -0.55;
  double eye_y = -0.18;
  double eye_spacing = 0.32;
  double eye_radius = 0.09;
  double brow_gap = 0.15;
  double brow_thickness = 0.04;
  double nose_length = 0.3;
  double nose_width = 0.12;
  double mouth_y = 0.48;
  double mouth_half_width = 0.24;
  double blush_strength = 0.3;
  // Identity-specific skin marks (moles), face units.
  std::vector<Point> marks;
};

// Image-level nuisance: where and how the face appears in one photo.
struct FacePose {
  double center_x = 64.0;
  double center_y = 64.0;
  double radius = 48.0;   // pixels per face unit
  double roll_deg = 0.0;  // clockwise in image coordinates
  double gain = 1.0;
  double light_slope = 0.0;  // horizontal brightness gradient across the face
  Color background{120, 130, 140};
  double mouth_open = 0.0;
  double noise_sigma = 2.0;
};

struct RenderedFace {
  Image image;   // H x W x 3 in [0, 255]
  Image labels;  // H x W x 1, Region codes
  Detection detection;
};

FaceAttributes random_identity(Rng& rng);
FacePose random_pose(Rng& rng, int size, double max_roll_deg);

RenderedFace render_face(const FaceAttributes& attrs, const FacePose& pose, int size, Rng& noise_rng);

struct ToyDatasetOptions {
  int identities = 80;
  int train_per_identity = 4;
  int eval_per_identity = 2;
  int image_size = 128;
  double max_roll_deg = 8.0;
  std::uint64_t seed = 7;
};

// Writes images/, labels/ and manifest.jsonl under `dir`; returns the
// manifest path.
std::filesystem::path generate_toy_dataset(const std::filesystem::path& dir,
                                           const ToyDatasetOptions& options);

}  // namespace facecamo
