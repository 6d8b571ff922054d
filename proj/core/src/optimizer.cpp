#include "facecamo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "facecamo/errors.hpp"

namespace facecamo {

std::string_view to_string(Backend b) { return b == Backend::kWhitebox ? "whitebox" : "blackbox"; }

Backend parse_backend(std::string_view s) {
  if (s == "whitebox") return Backend::kWhitebox;
  if (s == "blackbox") return Backend::kBlackbox;
  throw ConfigError("unknown backend '" + std::string(s) + "'");
}

void validate(const OptimizationConfig& cfg) {
  if (cfg.max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
  if (cfg.early_stop_window < 1) throw ConfigError("early_stop_window must be >= 1");
  if (cfg.max_iterations > 0 && cfg.early_stop_window > cfg.max_iterations)
    throw ConfigError("early_stop_window must not exceed max_iterations");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.lr_max > 0.0) || !(cfg.lr_min >= 0.0) || cfg.lr_min > cfg.lr_max)
    throw ConfigError("learning rates must satisfy 0 <= lr_min <= lr_max, lr_max > 0");
  if (cfg.clamping_interval < 1) throw ConfigError("clamping_interval must be >= 1");
  if (cfg.full_eval_interval < 1) throw ConfigError("full_eval_interval must be >= 1");
  if (cfg.num_colors < 2) throw ConfigError("num_colors must be >= 2");
  if (!(cfg.softness > 0.0)) throw ConfigError("softness must be positive");
  if (!(cfg.overlay_threshold >= 0.0 && cfg.overlay_threshold <= 1.0))
    throw ConfigError("overlay_threshold must lie in [0, 1]");
}

ParamGradient LossFunction::analytic_gradient(const PatternParams&) const {
  throw CapabilityError("loss has no analytic gradient");
}

ParamGradient gradient(const PatternParams& p, const LossFunction& loss, Backend backend,
                       const FiniteDifferenceSteps& steps) {
  if (backend == Backend::kWhitebox) {
    if (!loss.gradient_capable())
      throw CapabilityError("whitebox backend requires a gradient-capable model");
    return loss.analytic_gradient(p);
  }
  ParamGradient g;
  auto central = [&](auto&& set, double h) {
    PatternParams hi = p, lo = p;
    set(hi, h);
    set(lo, -h);
    return (loss.value(hi) - loss.value(lo)) / (2.0 * h);
  };
  g.width_frac = central([](PatternParams& q, double d) { q.width_frac += d; }, steps.width_frac);
  g.angle = central([](PatternParams& q, double d) { q.angle += d; }, steps.angle);
  g.phase = central([](PatternParams& q, double d) { q.phase += d; }, steps.phase);
  g.colors.assign(p.colors.size(), Color{0, 0, 0});
  for (std::size_t k = 0; k < p.colors.size(); ++k)
    for (int c = 0; c < 3; ++c)
      g.colors[k][c] = central([k, c](PatternParams& q, double d) { q.colors[k][c] += d; }, steps.channel);
  return g;
}

std::vector<double> to_normalized(const PatternParams& p) {
  std::vector<double> v{p.width_frac, p.angle / std::numbers::pi, p.phase};
  for (const Color& c : p.colors)
    for (double ch : c) v.push_back(ch / 255.0);
  return v;
}

void from_normalized(std::span<const double> v, PatternParams& p) {
  if (v.size() != 3 + 3 * p.colors.size()) throw ContractError("normalized vector size mismatch");
  p.width_frac = v[0];
  p.angle = v[1] * std::numbers::pi;
  p.phase = v[2];
  for (std::size_t k = 0; k < p.colors.size(); ++k)
    for (int c = 0; c < 3; ++c) p.colors[k][c] = v[3 + 3 * k + c] * 255.0;
}

std::vector<double> normalized_gradient(const ParamGradient& g) {
  std::vector<double> v{g.width_frac, g.angle * std::numbers::pi, g.phase};
  for (const Color& c : g.colors)
    for (double ch : c) v.push_back(ch * 255.0);
  return v;
}

bool should_stop_early(std::span<const double> acc, int window, bool strict_compat) {
  const long i = static_cast<long>(acc.size()) - 1;
  if (i < window) return false;
  if (strict_compat) {
    const long from = std::max(1L, i - window + 1);
    const double recent = *std::max_element(acc.begin() + from, acc.begin() + i + 1);
    return recent == acc[i - window];
  }
  const double before = *std::min_element(acc.begin(), acc.begin() + (i - window) + 1);
  const double recent = *std::min_element(acc.begin() + (i - window) + 1, acc.begin() + i + 1);
  return !(recent < before);
}

BatchSampler::BatchSampler(std::size_t population, std::size_t batch, std::uint64_t seed)
    : population_(population), batch_(std::min(batch, population)), rng_(seed), order_(population) {
  if (population == 0) throw ContractError("cannot sample batches from an empty set");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  cursor_ = population_;
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> out;
  out.reserve(batch_);
  while (out.size() < batch_) {
    if (cursor_ == population_) {
      for (std::size_t k = population_ - 1; k > 0; --k) std::swap(order_[k], order_[uniform_index(rng_, k + 1)]);
      cursor_ = 0;
    }
    out.push_back(order_[cursor_++]);
  }
  return out;
}

OptimizationTrace optimize_pattern(const OptimizationConfig& cfg, Family family,
                                   const PatternObjective& objective, const Palette* palette,
                                   const IterationObserver& observer) {
  validate(cfg);
  const bool constrained = cfg.mode == Mode::kConstrained;
  if (constrained) {
    if (!palette) throw ConfigError("constrained mode requires a palette");
    validate(*palette);
  }
  Rng init_rng(derive_seed(cfg.seed, 1));
  BatchSampler sampler(objective.num_samples(), static_cast<std::size_t>(cfg.batch_size),
                       derive_seed(cfg.seed, 2));

  PatternParams params = sample_random_params(init_rng, family, cfg.mode, palette, cfg.num_colors);
  Adam adam(3 + 3 * params.colors.size());
  OptimizationTrace trace;
  std::vector<double> accuracies;

  for (int i = 0;; ++i) {
    const double lr = lr_schedule(i, cfg.max_iterations, cfg.lr_max, cfg.lr_min);
    const std::vector<std::size_t> batch = sampler.next();
    BatchEvaluation ev = objective.evaluate(params, batch, true);

    IterationRecord rec;
    rec.index = i;
    rec.params = params;
    rec.loss = ev.loss;
    rec.accuracy = ev.accuracy;
    rec.lr = lr;
    rec.clamped = constrained && i % cfg.clamping_interval == 0;
    accuracies.push_back(ev.accuracy);

    std::string stop;
    if (i >= cfg.max_iterations) stop = "max_iterations";
    else if (should_stop_early(accuracies, cfg.early_stop_window, cfg.strict_compat)) stop = "early_stop";

    if (i % cfg.full_eval_interval == 0 || !stop.empty()) rec.full_accuracy = objective.full_accuracy(params);
    if (observer) observer(rec);
    trace.iterations.push_back(std::move(rec));
    if (!stop.empty()) {
      trace.stop_reason = stop;
      break;
    }

    if (!ev.gradient) throw ContractError("objective returned no gradient");
    std::vector<double> theta = to_normalized(params);
    const std::vector<double> g = normalized_gradient(*ev.gradient);
    adam.step(theta, g, lr_schedule(i + 1, cfg.max_iterations, cfg.lr_max, cfg.lr_min));
    from_normalized(theta, params);
    params = clip_params(params);
    params.phase -= std::floor(params.phase);
    if (constrained && (i + 1) % cfg.clamping_interval == 0)
      params.colors = project_to_palette(params.colors, *palette);
  }

  double best = 2.0;
  for (const IterationRecord& r : trace.iterations) {
    if (r.full_accuracy && *r.full_accuracy < best) {
      best = *r.full_accuracy;
      trace.best_index = r.index;
    }
  }
  trace.best_params = trace.iterations[trace.best_index].params;
  trace.best_accuracy = best;
  if (constrained && !within_palette(trace.best_params.colors, *palette)) {
    trace.best_params.colors = project_to_palette(trace.best_params.colors, *palette);
    trace.best_accuracy = objective.full_accuracy(trace.best_params);
  }
  return trace;
}

Json to_json(const IterationRecord& r) {
  return Json{{"i", r.index},
              {"params", to_json(r.params)},
              {"loss", r.loss},
              {"accuracy", r.accuracy},
              {"full_accuracy", r.full_accuracy ? Json(*r.full_accuracy) : Json()},
              {"lr", r.lr},
              {"clamped", r.clamped}};
}

IterationRecord record_from_json(const Json& j) {
  IterationRecord r;
  r.index = j.at("i").get<int>();
  r.params = params_from_json(j.at("params"));
  r.loss = j.at("loss").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  if (!j.at("full_accuracy").is_null()) r.full_accuracy = j["full_accuracy"].get<double>();
  r.lr = j.at("lr").get<double>();
  r.clamped = j.value("clamped", false);
  return r;
}

std::vector<IterationRecord> read_trace(const std::filesystem::path& path) {
  std::vector<IterationRecord> out;
  for (const Json& j : read_jsonl(path, kTraceSchema)) {
    try {
      out.push_back(record_from_json(j));
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ": malformed trace record: " + e.what());
    }
  }
  return out;
}

TraceWriter::TraceWriter(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error("cannot write trace: " + path.string());
  out_ << Json{{"schema", kTraceSchema}}.dump() << "\n";
  out_.flush();
}

void TraceWriter::append(const IterationRecord& r) {
  out_ << to_json(r).dump() << "\n";
  out_.flush();
}

AttackObjective::AttackObjective(const MatedScorer& scorer, const AttackSettings& settings,
                                 Backend backend)
    : scorer_(&scorer), settings_(settings), backend_(backend) {
  validate(settings.blend);
  if (!scorer.model().threshold)
    throw ContractError("model '" + scorer.model().name + "' is not calibrated");
  if (scorer.size() == 0) throw DataError("attack objective needs at least one mated pair");
  if (backend == Backend::kWhitebox && !scorer.model().gradient_capable())
    throw CapabilityError("model '" + scorer.model().name + "' does not support the whitebox backend");
}

std::vector<double> AttackObjective::similarities(const PatternParams& p,
                                                  std::span<const std::size_t> batch,
                                                  ParamGradient* grad) const {
  if (batch.empty()) throw ContractError("empty batch");
  const PatternImage pattern = rasterize(p, settings_.canvas, settings_.canvas, settings_.softness);
  const EmbeddingModel& model = *scorer_->model().model;
  std::vector<double> sims;
  sims.reserve(batch.size());
  Image pattern_grad;
  if (grad) pattern_grad = Image(settings_.canvas, settings_.canvas, 3);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t idx : batch) {
    const FaceSample& probe = scorer_->probe(idx);
    const Embedding& anchor = scorer_->anchor(idx);
    const Image blended = blend(probe, pattern, settings_.blend);
    if (!grad) {
      sims.push_back(cosine_similarity(embed(scorer_->model(), blended), anchor));
      continue;
    }
    // The embedding is unit length, so d(mean cos)/dy = anchor_hat / B.
    double norm = 0.0;
    for (double v : anchor) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<double> upstream(anchor.size());
    for (std::size_t k = 0; k < anchor.size(); ++k) upstream[k] = anchor[k] / norm * inv_b;
    auto [y, dimage] = model.embed_with_gradient(blended, upstream);
    sims.push_back(cosine_similarity(y, anchor));
    const Image dpat = blend_backward_pattern(probe, dimage, settings_.blend);
    for (std::size_t k = 0; k < dpat.storage().size(); ++k) pattern_grad.storage()[k] += dpat.storage()[k];
  }
  if (grad) *grad = rasterize_backward(p, pattern_grad, settings_.softness);
  return sims;
}

BatchEvaluation AttackObjective::evaluate(const PatternParams& p, std::span<const std::size_t> batch,
                                          bool want_gradient) const {
  BatchEvaluation ev;
  ParamGradient g;
  const bool analytic = want_gradient && backend_ == Backend::kWhitebox;
  const std::vector<double> sims = similarities(p, batch, analytic ? &g : nullptr);
  ev.loss = std::accumulate(sims.begin(), sims.end(), 0.0) / static_cast<double>(sims.size());
  ev.accuracy = acceptance_rate(sims, *scorer_->model().threshold);
  if (analytic) ev.gradient = std::move(g);
  else if (want_gradient)
    ev.gradient = gradient(p, batch_loss({batch.begin(), batch.end()}), Backend::kBlackbox);
  return ev;
}

double AttackObjective::full_accuracy(const PatternParams& p) const {
  const PatternImage pattern = rasterize(p, settings_.canvas, settings_.canvas, settings_.softness);
  return scorer_->rate(&pattern, &settings_.blend);
}

AttackObjective::BatchLoss AttackObjective::batch_loss(std::vector<std::size_t> batch) const {
  return BatchLoss(*this, std::move(batch));
}

double AttackObjective::BatchLoss::value(const PatternParams& p) const {
  const std::vector<double> sims = obj_->similarities(p, batch_, nullptr);
  return std::accumulate(sims.begin(), sims.end(), 0.0) / static_cast<double>(sims.size());
}

bool AttackObjective::BatchLoss::gradient_capable() const {
  return obj_->scorer_->model().gradient_capable();
}

ParamGradient AttackObjective::BatchLoss::analytic_gradient(const PatternParams& p) const {
  if (!gradient_capable()) return LossFunction::analytic_gradient(p);
  ParamGradient g;
  obj_->similarities(p, batch_, &g);
  return g;
}

double attack_loss(const MatedScorer& scorer, std::span<const std::size_t> batch,
                   const PatternParams& p, const AttackSettings& settings) {
  const AttackObjective obj(scorer, settings, Backend::kBlackbox);
  return obj.batch_loss({batch.begin(), batch.end()}).value(p);
}

}  // namespace facecamo
