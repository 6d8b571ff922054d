#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facecamo/adam.hpp"
#include "facecamo/face_pipeline.hpp"
#include "facecamo/io.hpp"
#include "facecamo/model.hpp"
#include "facecamo/pattern.hpp"

namespace facecamo {

enum class Backend { kWhitebox, kBlackbox };

std::string_view to_string(Backend b);
Backend parse_backend(std::string_view s);

struct OptimizationConfig {
  int max_iterations = 500;
  int early_stop_window = 100;
  double overlay_threshold = 0.4;
  int batch_size = 32;
  double lr_max = 0.05;
  double lr_min = 0.001;
  Mode mode = Mode::kUnconstrained;
  int clamping_interval = 10;
  std::uint64_t seed = 0;
  Backend backend = Backend::kWhitebox;
  // Full-set accuracy is recorded every this many iterations (and at exit);
  // best-iterate retrieval ranks those records.
  int full_eval_interval = 25;
  // Literal max-over-window exit test instead of "no improvement in window".
  bool strict_compat = false;
  int num_colors = kDefaultNumColors;
  double softness = kDefaultSoftness;
};

// Throws ConfigError on violated invariants.
void validate(const OptimizationConfig& cfg);

// Scalar loss over pattern parameters with an optional analytic gradient.
class LossFunction {
 public:
  virtual ~LossFunction() = default;
  virtual double value(const PatternParams& p) const = 0;
  virtual bool gradient_capable() const { return false; }
  // Analytic gradient; CapabilityError unless gradient_capable().
  virtual ParamGradient analytic_gradient(const PatternParams& p) const;
};

// Central-difference step sizes used by the blackbox backend.
struct FiniteDifferenceSteps {
  double width_frac = 1e-3;
  double angle = 1e-2;
  double phase = 1e-3;
  double channel = 1.0;
};

// Whitebox: analytic gradient (CapabilityError if the loss has none).
// Blackbox: central differences, 2 * (3 + 3K) loss evaluations.
ParamGradient gradient(const PatternParams& p, const LossFunction& loss, Backend backend,
                       const FiniteDifferenceSteps& steps = {});

// Flattened views used by the optimizer: [width_frac, angle/pi, phase,
// channels/255...].
std::vector<double> to_normalized(const PatternParams& p);
void from_normalized(std::span<const double> v, PatternParams& p);
std::vector<double> normalized_gradient(const ParamGradient& g);

struct BatchEvaluation {
  double loss = 0.0;      // mean anchor cosine similarity over the batch
  double accuracy = 0.0;  // fraction of the batch at or above threshold
  std::optional<ParamGradient> gradient;
};

// What the optimization loop sees of model and data. The attack objective
// implements it over a real model; tests substitute scripted objectives.
class PatternObjective {
 public:
  virtual ~PatternObjective() = default;
  virtual std::size_t num_samples() const = 0;
  virtual BatchEvaluation evaluate(const PatternParams& p, std::span<const std::size_t> batch,
                                   bool want_gradient) const = 0;
  virtual double full_accuracy(const PatternParams& p) const = 0;
};

struct IterationRecord {
  int index = 0;
  PatternParams params;
  double loss = 0.0;
  double accuracy = 0.0;  // batch accuracy A_i
  std::optional<double> full_accuracy;
  double lr = 0.0;
  bool clamped = false;
};

struct OptimizationTrace {
  std::vector<IterationRecord> iterations;
  int best_index = 0;
  PatternParams best_params;
  // Full-set accuracy of best_params (after the final palette clamp in
  // constrained mode).
  double best_accuracy = 1.0;
  std::string stop_reason;
};

inline constexpr const char* kTraceSchema = "facecamo.trace/v1";

Json to_json(const IterationRecord& r);
IterationRecord record_from_json(const Json& j);
std::vector<IterationRecord> read_trace(const std::filesystem::path& path);

// Appends records as they are produced, so an aborted run leaves a partial
// trace on disk.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void append(const IterationRecord& r);

 private:
  std::ofstream out_;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

// Pattern optimization loop: random start, blend/embed/score, exit test,
// Adam step with cosine-annealed rate in normalized parameter space, box
// clipping, periodic palette clamping in constrained mode, and retrieval of
// the lowest-accuracy iterate. `palette` is required in constrained mode.
OptimizationTrace optimize_pattern(const OptimizationConfig& cfg, Family family,
                                   const PatternObjective& objective, const Palette* palette = nullptr,
                                   const IterationObserver& observer = {});

// Early-exit test over batch accuracies recorded so far (index i is the
// last element).
bool should_stop_early(std::span<const double> accuracies, int window, bool strict_compat);

// Epoch-wise sampling without replacement.
class BatchSampler {
 public:
  BatchSampler(std::size_t population, std::size_t batch, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  std::size_t population_, batch_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

struct AttackSettings {
  int canvas = kCanonicalCanvas;
  double softness = kDefaultSoftness;
  BlendConfig blend{};
};

// Mean anchor cosine similarity of blended probes, differentiable through
// embedding, blend and rasterizer when the model is gradient capable.
class AttackObjective final : public PatternObjective {
 public:
  AttackObjective(const MatedScorer& scorer, const AttackSettings& settings, Backend backend);

  std::size_t num_samples() const override { return scorer_->size(); }
  BatchEvaluation evaluate(const PatternParams& p, std::span<const std::size_t> batch,
                           bool want_gradient) const override;
  double full_accuracy(const PatternParams& p) const override;

  // Loss restricted to a batch, as a LossFunction.
  class BatchLoss;
  BatchLoss batch_loss(std::vector<std::size_t> batch) const;

  // Similarities and, optionally, the analytic gradient of their mean.
  std::vector<double> similarities(const PatternParams& p, std::span<const std::size_t> batch,
                                   ParamGradient* grad) const;

  const AttackSettings& settings() const { return settings_; }

 private:
  const MatedScorer* scorer_;
  AttackSettings settings_;
  Backend backend_;
};

class AttackObjective::BatchLoss final : public LossFunction {
 public:
  BatchLoss(const AttackObjective& obj, std::vector<std::size_t> batch)
      : obj_(&obj), batch_(std::move(batch)) {}
  double value(const PatternParams& p) const override;
  bool gradient_capable() const override;
  ParamGradient analytic_gradient(const PatternParams& p) const override;

 private:
  const AttackObjective* obj_;
  std::vector<std::size_t> batch_;
};

// Mean cosine similarity between each blended probe and its anchor over the
// given mated-pair indices. ContractError on an empty batch or uncalibrated
// model.
double attack_loss(const MatedScorer& scorer, std::span<const std::size_t> batch,
                   const PatternParams& p, const AttackSettings& settings);

}  // namespace facecamo
