#include "facecamo/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "facecamo/errors.hpp"
#include "facecamo/toy_model.hpp"

namespace facecamo {

Image EmbeddingModel::embed_backward(const Image&, std::span<const double>) const {
  throw CapabilityError("adapter '" + adapter_id() + "' does not provide input gradients");
}

std::pair<Embedding, Image> EmbeddingModel::embed_with_gradient(const Image& image,
                                                                std::span<const double> upstream) const {
  Embedding e = embed(image);
  return {std::move(e), embed_backward(image, upstream)};
}

Embedding embed(const ModelHandle& model, const Image& image) {
  if (!model.model) throw ModelError("model handle '" + model.name + "' has no backend");
  const PreprocessingProfile prof = model.profile();
  if (image.channels() != 3 || image.height() != prof.canvas || image.width() != prof.canvas)
    throw ContractError("image shape does not match the preprocessing profile of '" + model.name + "'");
  Embedding e = model.model->embed(image);
  if (static_cast<int>(e.size()) != model.embedding_dim())
    throw ModelError("backend of '" + model.name + "' returned a wrong-sized embedding");
  return e;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ContractError("cosine_similarity: dimension mismatch");
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ContractError("cosine_similarity: zero vector");
  return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

VerificationPair make_pair(std::shared_ptr<const FaceSample> probe,
                           std::shared_ptr<const FaceSample> gallery) {
  VerificationPair p;
  p.mated = probe->identity == gallery->identity;
  p.probe = std::move(probe);
  p.gallery = std::move(gallery);
  return p;
}

ThresholdChoice choose_threshold(std::span<const double> mated_scores,
                                 std::span<const double> nonmated_scores) {
  if (mated_scores.empty() || nonmated_scores.empty())
    throw CalibrationError("threshold calibration needs both mated and non-mated pairs");
  struct Scored {
    double score;
    bool mated;
  };
  std::vector<Scored> all;
  all.reserve(mated_scores.size() + nonmated_scores.size());
  for (double s : mated_scores) all.push_back({s, true});
  for (double s : nonmated_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });

  const std::size_t n = all.size();
  const std::size_t total_mated = mated_scores.size();
  ThresholdChoice best;
  std::size_t best_correct = 0;
  bool found = false;
  // Sweep: after consuming every score <= all[i].score, those are rejected.
  std::size_t rejected_mated = 0, rejected_nonmated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (all[i].mated) ++rejected_mated; else ++rejected_nonmated;
    if (i + 1 < n && all[i + 1].score == all[i].score) continue;
    if (i + 1 == n) break;
    const double candidate = 0.5 * (all[i].score + all[i + 1].score);
    const std::size_t correct = (total_mated - rejected_mated) + rejected_nonmated;
    if (!found || correct >= best_correct) {
      found = true;
      best_correct = correct;
      best.threshold = candidate;
    }
  }
  if (!found) {
    // A single distinct score: accept everything at that score.
    best.threshold = all.front().score;
    best_correct = total_mated;
  }
  best.accuracy = static_cast<double>(best_correct) / static_cast<double>(n);
  return best;
}

double acceptance_rate(std::span<const double> sims, double threshold) {
  if (sims.empty()) return 0.0;
  const auto hits = std::count_if(sims.begin(), sims.end(), [&](double s) { return s >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(sims.size());
}

double calibrate_threshold(ModelHandle& model, const std::vector<VerificationPair>& pairs) {
  std::vector<double> mated, nonmated;
  for (const VerificationPair& p : pairs) {
    const double s = cosine_similarity(embed(model, p.probe->image), embed(model, p.gallery->image));
    (p.mated ? mated : nonmated).push_back(s);
  }
  const ThresholdChoice choice = choose_threshold(mated, nonmated);
  model.threshold = choice.threshold;
  model.baseline = acceptance_rate(mated, choice.threshold);
  return choice.threshold;
}

MatedScorer::MatedScorer(const ModelHandle& model, const std::vector<VerificationPair>& pairs)
    : model_(model) {
  for (const VerificationPair& p : pairs) {
    if (!p.mated) continue;
    probes_.push_back(p.probe);
    anchors_.push_back(embed(model_, p.gallery->image));
  }
}

std::vector<double> MatedScorer::similarities(const PatternImage* pattern,
                                              const BlendConfig* cfg) const {
  std::vector<std::size_t> all(probes_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return similarities(all, pattern, cfg);
}

std::vector<double> MatedScorer::similarities(std::span<const std::size_t> indices,
                                              const PatternImage* pattern,
                                              const BlendConfig* cfg) const {
  const BlendConfig default_cfg;
  std::vector<double> sims;
  sims.reserve(indices.size());
  for (std::size_t i : indices) {
    const FaceSample& probe = *probes_.at(i);
    const Embedding e = pattern ? embed(model_, blend(probe, *pattern, cfg ? *cfg : default_cfg))
                                : embed(model_, probe.image);
    sims.push_back(cosine_similarity(e, anchors_[i]));
  }
  return sims;
}

double MatedScorer::rate(const PatternImage* pattern, const BlendConfig* cfg) const {
  if (!model_.threshold) throw ContractError("model '" + model_.name + "' is not calibrated");
  return acceptance_rate(similarities(pattern, cfg), *model_.threshold);
}

double MatedScorer::rate(std::span<const std::size_t> indices, const PatternImage* pattern,
                         const BlendConfig* cfg) const {
  if (!model_.threshold) throw ContractError("model '" + model_.name + "' is not calibrated");
  return acceptance_rate(similarities(indices, pattern, cfg), *model_.threshold);
}

double recognition_rate(const ModelHandle& model, const std::vector<VerificationPair>& pairs,
                        const PatternImage* pattern, const BlendConfig* cfg) {
  if (!model.threshold) throw ContractError("model '" + model.name + "' is not calibrated");
  return MatedScorer(model, pairs).rate(pattern, cfg);
}

AdapterRegistry::AdapterRegistry() {
  factories_["toy"] = [](const AdapterSpec& spec) -> std::shared_ptr<const EmbeddingModel> {
    auto net = std::make_shared<ToyEmbeddingNet>(ToyEmbeddingNet::load(spec.weights));
    if (!(net->profile() == spec.profile))
      throw ConfigError("registry profile for '" + spec.name + "' does not match its weights");
    return net;
  };
}

AdapterRegistry& AdapterRegistry::instance() {
  static AdapterRegistry registry;
  return registry;
}

void AdapterRegistry::register_adapter(const std::string& id, AdapterFactory factory) {
  factories_[id] = std::move(factory);
}

bool AdapterRegistry::contains(const std::string& id) const { return factories_.count(id) > 0; }

std::shared_ptr<const EmbeddingModel> AdapterRegistry::create(const AdapterSpec& spec) const {
  const auto it = factories_.find(spec.adapter);
  if (it == factories_.end()) throw ConfigError("unknown model adapter '" + spec.adapter + "'");
  return it->second(spec);
}

}  // namespace facecamo
