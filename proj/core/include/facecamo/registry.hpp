#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "facecamo/model.hpp"

namespace facecamo {

inline constexpr const char* kRegistrySchema = "facecamo.registry/v1";
inline constexpr const char* kThresholdsSchema = "facecamo.thresholds/v1";

// Registry file: {"schema", "models": [{name, adapter, weights, profile}]}.
// Weight paths are resolved against the registry's directory.
std::vector<AdapterSpec> read_registry(const std::filesystem::path& path);
void write_registry(const std::filesystem::path& path, const std::vector<AdapterSpec>& specs);

// Instantiates every entry through AdapterRegistry, in file order.
std::vector<ModelHandle> load_models(const std::vector<AdapterSpec>& specs);

struct ThresholdEntry {
  std::string model;
  std::string calibration_hash;
  std::string status = "ok";  // "ok" or an error message
  std::optional<double> threshold;
  std::optional<double> baseline;
};

std::vector<ThresholdEntry> read_thresholds(const std::filesystem::path& path);
void write_thresholds(const std::filesystem::path& path, const std::vector<ThresholdEntry>& entries);

// Copies threshold and baseline onto each handle from the entry matching its
// name and `calibration_hash`. ConfigError when a handle has no usable entry.
void apply_thresholds(std::vector<ModelHandle>& models, const std::vector<ThresholdEntry>& entries,
                      const std::string& calibration_hash);

// Calibrates each handle on `pairs`. Failures are recorded per model rather
// than thrown.
std::vector<ThresholdEntry> calibrate_all(std::vector<ModelHandle>& models,
                                          const std::vector<VerificationPair>& pairs,
                                          const std::string& calibration_hash, int jobs = 1);

}  // namespace facecamo
