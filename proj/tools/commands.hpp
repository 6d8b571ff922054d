#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "experiment.hpp"

namespace facecamo::cli {

struct GlobalOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  int jobs = 0;  // 0: logical cores
  std::optional<std::filesystem::path> out;
  std::string run_name;
  bool dry_run = false;
  bool strict_compat = false;
};

struct OptimizeOptions {
  std::string model;
  std::string family;
  int restarts = 10;
  std::optional<std::string> mode;
  std::optional<std::string> backend;
};

struct EvaluateOptions {
  std::vector<std::filesystem::path> params;
};

struct BaselineOptions {
  int patterns = 100;
  int identities = 0;  // 0: every eval identity
};

struct NeighborhoodOptions {
  std::filesystem::path params;
  int neighbors = 10;
  NeighborhoodDeltas deltas;
};

struct TransferOptions {
  std::vector<std::string> patterns;  // MODEL=PATH
};

struct IngestOptions {
  std::filesystem::path manifest;
  std::vector<std::string> simulated;  // PATTERN_ID=PARAMS_PATH
};

struct RenderOptions {
  std::filesystem::path params;
  int size = kCanonicalCanvas;
  std::optional<std::filesystem::path> output;
};

struct ToyDataOptions {
  std::filesystem::path output;
  int identities = 80;
  std::uint64_t seed = 7;
};

struct TrainToyOptions {
  std::filesystem::path dataset;
  std::string name = "toy";
  int epochs = 30;
  std::filesystem::path weights;
  std::optional<std::filesystem::path> registry;
};

// Each returns the process exit code; errors propagate as exceptions.
int cmd_calibrate(const GlobalOptions& g);
int cmd_optimize(const GlobalOptions& g, const OptimizeOptions& o);
int cmd_evaluate(const GlobalOptions& g, const EvaluateOptions& o);
int cmd_random_baseline(const GlobalOptions& g, const BaselineOptions& o);
int cmd_neighborhood(const GlobalOptions& g, const NeighborhoodOptions& o);
int cmd_transfer_matrix(const GlobalOptions& g, const TransferOptions& o);
int cmd_ingest(const GlobalOptions& g, const IngestOptions& o);
int cmd_render_pattern(const GlobalOptions& g, const RenderOptions& o);
int cmd_make_toy_data(const GlobalOptions& g, const ToyDataOptions& o);
int cmd_train_toy(const GlobalOptions& g, const TrainToyOptions& o);

}  // namespace facecamo::cli
