#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "facecamo/face_pipeline.hpp"
#include "facecamo/image.hpp"

namespace facecamo {

using Embedding = std::vector<double>;

struct PreprocessingProfile {
  int canvas = kCanonicalCanvas;
  std::array<double, 3> mean{0.5, 0.5, 0.5};
  std::array<double, 3> stddev{0.5, 0.5, 0.5};

  friend bool operator==(const PreprocessingProfile&, const PreprocessingProfile&) = default;
};

// Adapter contract every embedding backend implements. Inputs are canvas-sized
// RGB images in [0, 1]; the backend applies its own normalization.
class EmbeddingModel {
 public:
  virtual ~EmbeddingModel() = default;

  virtual std::string adapter_id() const = 0;
  virtual int embedding_dim() const = 0;
  virtual PreprocessingProfile profile() const = 0;
  virtual bool gradient_capable() const = 0;
  // Whether embed/embed_backward may run concurrently on one instance.
  virtual bool concurrency_safe() const = 0;

  // Unit-length embedding.
  virtual Embedding embed(const Image& image) const = 0;

  // dL/dimage given dL/dembedding at `image`. Default: CapabilityError.
  virtual Image embed_backward(const Image& image, std::span<const double> upstream) const;

  // Embedding and dL/dimage in one call. Default: embed + embed_backward.
  virtual std::pair<Embedding, Image> embed_with_gradient(const Image& image,
                                                          std::span<const double> upstream) const;
};

struct ModelHandle {
  std::string name;
  std::shared_ptr<const EmbeddingModel> model;
  std::optional<double> threshold;
  // Clean verification accuracy measured at calibration time.
  std::optional<double> baseline;

  int embedding_dim() const { return model->embedding_dim(); }
  bool gradient_capable() const { return model->gradient_capable(); }
  PreprocessingProfile profile() const { return model->profile(); }
};

// Throws ContractError when the image does not match the model profile.
Embedding embed(const ModelHandle& model, const Image& image);

// Throws ContractError on dimension mismatch or zero-norm input.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct VerificationPair {
  std::shared_ptr<const FaceSample> probe;
  std::shared_ptr<const FaceSample> gallery;
  bool mated = false;
};

// Builds a pair and checks mated <=> equal identities.
VerificationPair make_pair(std::shared_ptr<const FaceSample> probe,
                           std::shared_ptr<const FaceSample> gallery);

struct ThresholdChoice {
  double threshold = 0.0;
  double accuracy = 0.0;
};

// Threshold maximizing (true accepts + true rejects) / N over the midpoints
// of the sorted distinct scores; ties go to the larger threshold. A score is
// accepted when score >= threshold. Throws CalibrationError if either class is
// empty.
ThresholdChoice choose_threshold(std::span<const double> mated_scores,
                                 std::span<const double> nonmated_scores);

// Calibrates on `pairs`, stores threshold and clean mated recognition rate on
// the handle, and returns the threshold.
double calibrate_threshold(ModelHandle& model, const std::vector<VerificationPair>& pairs);

// Fraction of mated pairs whose (optionally patterned) probe embedding meets
// the handle threshold against the clean gallery embedding.
double recognition_rate(const ModelHandle& model, const std::vector<VerificationPair>& pairs,
                        const PatternImage* pattern = nullptr, const BlendConfig* cfg = nullptr);

// Mated pairs with their clean gallery (anchor) embeddings precomputed, so a
// handle can score many patterns cheaply.
class MatedScorer {
 public:
  MatedScorer(const ModelHandle& model, const std::vector<VerificationPair>& pairs);

  const ModelHandle& model() const { return model_; }
  std::size_t size() const { return probes_.size(); }
  const FaceSample& probe(std::size_t i) const { return *probes_[i]; }
  const Embedding& anchor(std::size_t i) const { return anchors_[i]; }

  // Cosine similarity of every mated probe (patterned when `pattern` is set)
  // to its anchor.
  std::vector<double> similarities(const PatternImage* pattern, const BlendConfig* cfg) const;

  // Restricted to the given mated-pair indices.
  std::vector<double> similarities(std::span<const std::size_t> indices, const PatternImage* pattern,
                                   const BlendConfig* cfg) const;

  double rate(const PatternImage* pattern, const BlendConfig* cfg) const;
  double rate(std::span<const std::size_t> indices, const PatternImage* pattern,
              const BlendConfig* cfg) const;

 private:
  ModelHandle model_;
  std::vector<std::shared_ptr<const FaceSample>> probes_;
  std::vector<Embedding> anchors_;
};

// Fraction of similarities meeting `threshold`.
double acceptance_rate(std::span<const double> sims, double threshold);

// Builds an adapter instance from a registry entry.
struct AdapterSpec {
  std::string name;
  std::string adapter;
  std::string weights;  // resolved path
  PreprocessingProfile profile;
};

using AdapterFactory = std::function<std::shared_ptr<const EmbeddingModel>(const AdapterSpec&)>;

// Process-wide adapter table. "toy" is always registered.
class AdapterRegistry {
 public:
  static AdapterRegistry& instance();
  void register_adapter(const std::string& id, AdapterFactory factory);
  bool contains(const std::string& id) const;
  std::shared_ptr<const EmbeddingModel> create(const AdapterSpec& spec) const;

 private:
  AdapterRegistry();
  std::map<std::string, AdapterFactory> factories_;
};

}  // namespace facecamo
