#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facecamo/dataset.hpp"
#include "facecamo/model.hpp"
#include "facecamo/pattern.hpp"

namespace facecamo {

// Pattern overlay settings shared by every evaluation.
struct EvalSettings {
  int canvas = kCanonicalCanvas;
  double softness = kDefaultSoftness;
  BlendConfig blend{};
  int jobs = 1;
};

// ---- random-pattern baseline ----

struct BaselineRow {
  std::string model;
  double baseline = 0.0;  // clean rate on the sampled identities
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
};

struct BaselineStats {
  int n_patterns = 0;
  int n_identities = 0;
  std::uint64_t seed = 0;
  std::vector<BaselineRow> rows;  // one per model, in input order
};

// Samples n_patterns unconstrained random patterns (family drawn uniformly)
// and n_identities mated pairs, then scores every pattern on every model.
// DataError when fewer than n_identities mated pairs are available.
BaselineStats run_random_baseline(const std::vector<ModelHandle>& models,
                                  const std::vector<VerificationPair>& pairs, int n_patterns,
                                  int n_identities, std::uint64_t seed, const EvalSettings& settings);

// ---- transferability ----

struct PatternEntry {
  std::string opt_model;
  PatternParams params;
  std::string label;  // free-form provenance, e.g. the params file
};

struct TransferCell {
  std::string opt_model;
  std::string eval_model;
  Family family = Family::kStripes;
  Mode mode = Mode::kUnconstrained;
  std::optional<double> accuracy;  // unset when no pattern was supplied
  bool column_min = false;
};

struct TransferMatrix {
  std::vector<std::string> optimization_models;
  std::vector<std::string> evaluation_models;
  // Row-major over (family, mode, opt_model), then eval_model.
  std::vector<TransferCell> cells;

  const TransferCell* find(const std::string& opt, const std::string& eval, Family f, Mode m) const;
};

// Every (opt_model, family, mode) combination seen among the patterns is
// evaluated on every model. Missing combinations become empty cells.
// Column minima are marked per (family, mode, eval_model).
TransferMatrix run_transfer_matrix(const std::vector<PatternEntry>& patterns,
                                   const std::vector<std::string>& optimization_models,
                                   const std::vector<ModelHandle>& eval_models,
                                   const std::vector<VerificationPair>& pairs,
                                   const EvalSettings& settings);

// ---- neighbourhood check ----

struct NeighborhoodDeltas {
  double color = 4.0;     // channel units
  double width_px = 5.0;  // pixels of the canvas
  double angle_deg = 2.0;
};

struct NeighborhoodRow {
  std::string model;
  double center_accuracy = 0.0;
  double mean_abs_delta = 0.0;
  double std = 0.0;  // population std of neighbour accuracies
  std::vector<double> neighbor_accuracies;
};

struct NeighborhoodResult {
  PatternParams center;
  NeighborhoodDeltas deltas;
  int n_neighbors = 0;
  std::vector<NeighborhoodRow> rows;
};

// ConfigError if `center` is outside the box bounds.
NeighborhoodResult run_neighborhood_check(const PatternParams& center,
                                          const std::vector<ModelHandle>& models,
                                          const std::vector<VerificationPair>& pairs, int n_neighbors,
                                          const NeighborhoodDeltas& deltas, std::uint64_t seed,
                                          const EvalSettings& settings);

// ---- externally produced images ----

inline constexpr const char* kExternalSchema = "facecamo.external/v1";

struct ExternalRecord {
  std::string image;
  std::string identity;
  std::string pattern_id;
  std::string stage;  // "generated" or "physical"
  std::map<std::string, std::string> attributes;
  std::optional<std::string> mask;
  std::optional<std::string> labels;
  std::optional<Detection> detection;
};

std::vector<ExternalRecord> read_external_manifest(const std::filesystem::path& path);
void write_external_manifest(const std::filesystem::path& path, const std::vector<ExternalRecord>& records);

struct ExternalRow {
  std::string pattern_id;
  std::string model;
  std::string stage;
  std::string attributes;  // "k=v,k=v" in key order; empty when none
  int comparisons = 0;
  double accuracy = 0.0;
  double median_similarity = 0.0;
};

struct ExternalTable {
  std::vector<ExternalRow> rows;  // sorted by (pattern_id, stage, attributes), models in input order
  int skipped = 0;
};

// Each manifest image is a probe compared against every clean eval-split
// image of its identity in `gallery`. Records whose identity is absent from
// the gallery, or that fail detection/segmentation, are skipped with a
// warning.
ExternalTable evaluate_external(const std::vector<ExternalRecord>& records,
                                const std::filesystem::path& base_dir,
                                const std::vector<ModelHandle>& models, const FaceDataset& gallery,
                                const PreprocessConfig& preprocess, int jobs = 1);

// ---- statistics ----

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double mean_difference = 0.0;
};

// Paired two-sided t-test. ContractError on unequal lengths or fewer than
// two pairs.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

double median(std::vector<double> v);
// Population mean and standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& v);

// ---- similarity summaries ----

struct SimilaritySummaryRow {
  std::string pattern;  // "none" for the clean condition
  std::string model;
  double median = 0.0;
  double threshold = 0.0;
};

// Median mated similarity per (pattern, model); the clean condition first.
std::vector<SimilaritySummaryRow> similarity_summary(
    const std::vector<std::pair<std::string, PatternParams>>& patterns,
    const std::vector<ModelHandle>& models, const std::vector<VerificationPair>& pairs,
    const EvalSettings& settings);

// ---- report ----

struct ReportInputs {
  std::vector<std::string> model_order;  // registry order
  std::optional<TransferMatrix> transfer;
  std::optional<BaselineStats> baseline;
  std::optional<NeighborhoodResult> neighborhood;
  std::optional<ExternalTable> external;
  std::vector<SimilaritySummaryRow> similarity;
  std::optional<TTestResult> simulated_vs_generated;
};

// Plain-text report; byte-identical for identical inputs. ContractError when
// no result is present.
std::string render_report(const ReportInputs& in);

// Tab-separated tables with a leading "# schema: <tag>" line.
void write_baseline_table(const std::filesystem::path& path, const BaselineStats& s);
void write_transfer_table(const std::filesystem::path& path, const TransferMatrix& m);
void write_neighborhood_table(const std::filesystem::path& path, const NeighborhoodResult& r);
void write_external_table(const std::filesystem::path& path, const ExternalTable& t);
void write_similarity_table(const std::filesystem::path& path, const std::vector<SimilaritySummaryRow>& rows);

std::string format_fixed(double v, int digits = 4);

}  // namespace facecamo
