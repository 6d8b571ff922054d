#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "facecamo/dataset.hpp"
#include "facecamo/model.hpp"

namespace facecamo {

struct ToyArchitecture {
  int input_pool = 4;  // area downsampling applied before the first conv
  int conv1_channels = 12;
  int conv2_channels = 24;
  int embedding_dim = 32;

  friend bool operator==(const ToyArchitecture&, const ToyArchitecture&) = default;
};

// Small convolutional embedding network:
//   normalize -> avgpool(input_pool) -> conv3x3 -> SiLU -> avgpool2
//   -> conv3x3 -> SiLU -> avgpool2 -> linear -> L2 normalize.
// Inference is const and thread-safe; gradients w.r.t. input are exact.
class ToyEmbeddingNet final : public EmbeddingModel {
 public:
  ToyEmbeddingNet(const ToyArchitecture& arch, const PreprocessingProfile& profile,
                  std::uint64_t init_seed);

  static ToyEmbeddingNet load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::string adapter_id() const override { return "toy"; }
  int embedding_dim() const override { return arch_.embedding_dim; }
  PreprocessingProfile profile() const override { return profile_; }
  bool gradient_capable() const override { return true; }
  bool concurrency_safe() const override { return true; }

  Embedding embed(const Image& image) const override;
  Image embed_backward(const Image& image, std::span<const double> upstream) const override;
  std::pair<Embedding, Image> embed_with_gradient(const Image& image,
                                                  std::span<const double> upstream) const override;

  const ToyArchitecture& architecture() const { return arch_; }
  // FNV-1a over the weight bytes.
  std::uint64_t checksum() const;
  std::size_t parameter_count() const { return params_.size(); }

  // Training hooks. The parameter vector is flat; gradients share its layout.
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  struct Activations;
  // Forward pass keeping what backward needs.
  Embedding forward(const Image& image, Activations& acts) const;
  // Accumulates dL/dparams into `param_grad` (when non-null) and returns
  // dL/dimage (when `want_input_grad`).
  Image backward(const Activations& acts, std::span<const double> upstream,
                 std::vector<double>* param_grad, bool want_input_grad) const;

 private:
  struct Layout;
  Layout layout() const;
  void check_input(const Image& image) const;

  ToyArchitecture arch_;
  PreprocessingProfile profile_;
  std::vector<double> params_;
};

struct ToyEmbeddingNet::Activations {
  std::vector<double> pooled_input;  // C0 x S0 x S0
  std::vector<double> z1, a1, p1;    // conv1 pre-activation, activation, pooled
  std::vector<double> z2, a2, p2;
  std::vector<double> features;      // un-normalized embedding
  double norm = 0.0;
  Embedding output;
};

struct ToyTrainOptions {
  int epochs = 30;
  std::uint64_t seed = 0;
  int batch_size = 32;
  double learning_rate = 1e-2;
  // Additive cosine margin and logit scale of the metric loss.
  double margin = 0.25;
  double scale = 16.0;
  // Probability of overlaying a random stripe/chevron pattern on the skin
  // mask of a training image.
  double pattern_augment_prob = 0.5;
  ToyArchitecture arch{};
  PreprocessingProfile profile{};
};

struct ToyTrainingResult {
  ModelHandle handle;                // calibrated on held-out pairs
  double heldout_accuracy = 0.0;     // (TA + TR) / N at the calibrated threshold
  double heldout_mated_rate = 0.0;
  std::vector<double> epoch_losses;
};

// Trains on the train split; requires >= 20 identities with >= 2 training
// images each (DataError otherwise). epochs == 0 returns the initial network.
ToyTrainingResult train_toy_model(const FaceDataset& dataset, const ToyTrainOptions& options,
                                  const std::string& name = "toy");

// Verification accuracy (TA + TR) / N of a calibrated handle.
double verification_accuracy(const ModelHandle& model, const std::vector<VerificationPair>& pairs);

}  // namespace facecamo
