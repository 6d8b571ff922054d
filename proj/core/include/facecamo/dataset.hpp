#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "facecamo/face_pipeline.hpp"
#include "facecamo/model.hpp"

namespace facecamo {

inline constexpr const char* kDatasetSchema = "facecamo.dataset/v1";

// One line of a dataset manifest. Paths are stored as written and resolved
// against the manifest directory on load.
struct DatasetRecord {
  std::string image;
  std::string identity;
  std::optional<std::string> mask;
  std::optional<std::string> labels;
  std::optional<Detection> detection;
  // "train" or "eval". Verification pairs come from the eval split.
  std::string split = "eval";
};

std::vector<DatasetRecord> read_dataset_manifest(const std::filesystem::path& path);
void write_dataset_manifest(const std::filesystem::path& path,
                            const std::vector<DatasetRecord>& records);

struct FaceDataset {
  std::vector<std::shared_ptr<const FaceSample>> samples;
  std::vector<std::string> splits;  // parallel to samples

  std::vector<std::shared_ptr<const FaceSample>> split(const std::string& name) const;
  // Distinct identities of a split, in first-appearance order.
  std::vector<std::string> identities(const std::string& split_name) const;
};

// Preprocesses every record; records failing detection or segmentation are
// skipped with a warning on stderr. `jobs` bounds the worker count.
FaceDataset load_dataset(const std::filesystem::path& manifest, const PreprocessConfig& cfg,
                         const FaceDetector& detector, const FaceParser& parser, int jobs = 1);

// Loads with the fixture detector/parser.
FaceDataset load_dataset(const std::filesystem::path& manifest, const PreprocessConfig& cfg = {},
                         int jobs = 1);

// Mated pairs (first eval image probe, second eval image gallery) for every
// eval identity with two or more images, plus an equal number of non-mated
// pairs drawn deterministically from `seed`.
std::vector<VerificationPair> verification_pairs(const FaceDataset& dataset, std::uint64_t seed);

// Mated pairs only, restricted to the listed identities (all when empty).
std::vector<VerificationPair> mated_pairs(const std::vector<VerificationPair>& pairs,
                                          const std::vector<std::string>& identities = {});

// Order-sensitive FNV-1a digest of the pair list (identities and paths).
std::uint64_t pairs_digest(const std::vector<VerificationPair>& pairs);

}  // namespace facecamo
