#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facecamo/dataset.hpp"
#include "facecamo/eval_harness.hpp"
#include "facecamo/io.hpp"
#include "facecamo/model.hpp"
#include "facecamo/optimizer.hpp"
#include "facecamo/pattern.hpp"
#include "facecamo/registry.hpp"

namespace facecamo::cli {

inline constexpr const char* kExperimentSchema = "facecamo.experiment/v1";

struct ExperimentConfig {
  std::filesystem::path source;  // config file, empty when built from defaults
  std::filesystem::path dataset;
  std::filesystem::path registry;
  std::optional<std::filesystem::path> thresholds;
  std::optional<std::filesystem::path> palette;
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 0;
  // Seed of the non-mated pairing; part of the calibration-set identity.
  std::uint64_t pairs_seed = 0;
  // Ignore the sidecar and calibrate on this experiment's pairs.
  bool recalibrate = false;
  PreprocessConfig preprocess;
  BlendConfig blend;
  double softness = kDefaultSoftness;
  OptimizationConfig optimization;

  Json raw;  // the document as loaded, after overrides
};

// Reads the JSON config. Relative paths resolve against the config file's
// directory; FACECAMO_DATASET, FACECAMO_REGISTRY, FACECAMO_THRESHOLDS,
// FACECAMO_PALETTE, FACECAMO_OUTPUT_DIR and FACECAMO_SEED override the
// corresponding entries. ConfigError on unknown keys or missing paths.
ExperimentConfig load_experiment(const std::filesystem::path& path);

// Stable hash of the effective configuration.
std::string config_hash(const ExperimentConfig& cfg);

// Creates <output_dir>/<command>-<UTC timestamp>-<hash8>, or
// <output_dir>/<run_name> when a name is given.
std::filesystem::path make_run_dir(const std::filesystem::path& output_dir, const std::string& command,
                                   const ExperimentConfig& cfg, const std::string& run_name);

// Everything a command needs once the config has been validated.
struct Context {
  FaceDataset dataset;
  std::vector<VerificationPair> pairs;
  std::string calibration_hash;
  std::vector<ModelHandle> models;  // registry order, calibrated
  std::vector<ThresholdEntry> thresholds;
  bool calibrated_in_memory = false;
};

// Loads dataset, registry and thresholds. With no sidecar (or recalibrate
// set) the models are calibrated here.
Context load_context(const ExperimentConfig& cfg, int jobs);

EvalSettings eval_settings(const ExperimentConfig& cfg, int jobs);

}  // namespace facecamo::cli
