#include "commands.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <mutex>

#include "facecamo/errors.hpp"
#include "facecamo/parallel.hpp"
#include "facecamo/png_io.hpp"
#include "facecamo/rng.hpp"
#include "facecamo/synth.hpp"
#include "facecamo/toy_model.hpp"

namespace facecamo::cli {

namespace {

int jobs_of(const GlobalOptions& g) { return g.jobs > 0 ? g.jobs : default_jobs(); }

ExperimentConfig effective_config(const GlobalOptions& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this command");
  ExperimentConfig cfg = load_experiment(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.optimization.seed = *g.seed;
    cfg.raw["seed"] = *g.seed;
  }
  if (g.out) cfg.output_dir = *g.out;
  cfg.optimization.strict_compat = g.strict_compat;
  return cfg;
}

std::filesystem::path run_dir(const GlobalOptions& g, const std::string& command, const ExperimentConfig& cfg) {
  const std::filesystem::path dir = make_run_dir(cfg.output_dir, command, cfg, g.run_name);
  write_json_file(dir / "config.json", [&] {
    Json j = cfg.raw;
    j["seed"] = cfg.seed;
    j["strict_compat"] = cfg.optimization.strict_compat;
    return j;
  }());
  return dir;
}

void print_plan(const std::string& command, const ExperimentConfig& cfg, const std::vector<std::string>& extra) {
  std::cout << "dry run: " << command << "\n"
            << "  config:      " << cfg.source.string() << " (hash " << config_hash(cfg) << ")\n"
            << "  dataset:     " << cfg.dataset.string() << "\n"
            << "  registry:    " << cfg.registry.string() << "\n"
            << "  thresholds:  "
            << (cfg.thresholds && !cfg.recalibrate ? cfg.thresholds->string() : std::string("calibrate in memory"))
            << "\n"
            << "  output_dir:  " << cfg.output_dir.string() << "\n"
            << "  seed:        " << cfg.seed << "\n";
  std::cout << "  models:";
  for (const AdapterSpec& s : read_registry(cfg.registry)) std::cout << " " << s.name << "(" << s.adapter << ")";
  std::cout << "\n";
  for (const std::string& line : extra) std::cout << "  " << line << "\n";
}

void save_thresholds_if_calibrated(const Context& ctx, const std::filesystem::path& dir) {
  if (ctx.calibrated_in_memory) write_thresholds(dir / "thresholds.json", ctx.thresholds);
}

std::vector<std::string> model_order(const Context& ctx) {
  std::vector<std::string> out;
  for (const ModelHandle& m : ctx.models) out.push_back(m.name);
  return out;
}

const ModelHandle& find_model(const Context& ctx, const std::string& name) {
  for (const ModelHandle& m : ctx.models)
    if (m.name == name) return m;
  throw ConfigError("model '" + name + "' is not in the registry");
}

std::pair<std::string, std::string> split_assignment(const std::string& s, const std::string& flag) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
    throw ConfigError(flag + " expects NAME=PATH, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

void write_report(const std::filesystem::path& dir, const ReportInputs& in) {
  const std::string text = render_report(in);
  write_text_file(dir / "report.txt", text);
  std::cout << text;
}

std::string label_of(const std::filesystem::path& p) { return p.stem().string(); }

}  // namespace

int cmd_calibrate(const GlobalOptions& g) {
  const ExperimentConfig cfg = effective_config(g);
  if (g.dry_run) {
    print_plan("calibrate", cfg, {"writes thresholds.json with per-model threshold and clean baseline"});
    return 0;
  }
  const int jobs = jobs_of(g);
  std::vector<ModelHandle> models = load_models(read_registry(cfg.registry));
  const FaceDataset ds = load_dataset(cfg.dataset, cfg.preprocess, jobs);
  const std::vector<VerificationPair> pairs = verification_pairs(ds, cfg.pairs_seed);
  const std::string hash = hex64(pairs_digest(pairs));
  const std::vector<ThresholdEntry> entries = calibrate_all(models, pairs, hash, jobs);
  const std::filesystem::path dir = run_dir(g, "calibrate", cfg);
  write_thresholds(dir / "thresholds.json", entries);
  int failures = 0;
  std::cout << "calibration set " << hash << " (" << pairs.size() << " pairs)\n";
  for (const ThresholdEntry& e : entries) {
    if (e.status == "ok")
      std::cout << "  " << e.model << ": threshold " << format_fixed(*e.threshold, 6) << ", baseline "
                << format_fixed(*e.baseline) << "\n";
    else {
      ++failures;
      std::cout << "  " << e.model << ": FAILED (" << e.status << ")\n";
    }
  }
  std::cout << "wrote " << (dir / "thresholds.json").string() << "\n";
  return failures ? 1 : 0;
}

int cmd_optimize(const GlobalOptions& g, const OptimizeOptions& o) {
  ExperimentConfig cfg = effective_config(g);
  if (o.restarts < 1) throw ConfigError("--restarts must be >= 1");
  const Family family = parse_family(o.family);
  if (o.mode) cfg.optimization.mode = parse_mode(*o.mode);
  if (o.backend) cfg.optimization.backend = parse_backend(*o.backend);
  cfg.raw["optimize"] = {{"model", o.model},
                         {"family", o.family},
                         {"restarts", o.restarts},
                         {"mode", to_string(cfg.optimization.mode)},
                         {"backend", to_string(cfg.optimization.backend)}};
  if (cfg.optimization.mode == Mode::kConstrained && !cfg.palette)
    throw ConfigError("constrained mode requires 'palette' in the config");
  std::optional<Palette> palette;
  if (cfg.palette) palette = read_palette(*cfg.palette);
  if (palette) validate(*palette);
  const OptimizationConfig& oc = cfg.optimization;

  if (g.dry_run) {
    print_plan("optimize", cfg,
               {"model: " + o.model, "family: " + o.family, "restarts: " + std::to_string(o.restarts),
                "mode: " + std::string(to_string(oc.mode)) + ", backend: " + std::string(to_string(oc.backend)),
                "max_iterations: " + std::to_string(oc.max_iterations) +
                    ", early_stop_window: " + std::to_string(oc.early_stop_window) +
                    ", batch_size: " + std::to_string(oc.batch_size)});
    return 0;
  }

  const int jobs = jobs_of(g);
  const Context ctx = load_context(cfg, jobs);
  const ModelHandle& model = find_model(ctx, o.model);
  const MatedScorer scorer(model, ctx.pairs);
  AttackSettings settings;
  settings.canvas = cfg.preprocess.canvas;
  settings.softness = cfg.softness;
  settings.blend = cfg.blend;
  const AttackObjective objective(scorer, settings, oc.backend);

  const std::filesystem::path dir = run_dir(g, "optimize", cfg);
  save_thresholds_if_calibrated(ctx, dir);

  struct Outcome {
    std::string status = "ok";
    std::optional<OptimizationTrace> trace;
    std::uint64_t seed = 0;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(o.restarts));
  std::mutex log_mutex;
  const int restart_jobs = model.model->concurrency_safe() ? jobs : 1;
  parallel_for(outcomes.size(), restart_jobs, [&](std::size_t r) {
    Outcome& out = outcomes[r];
    OptimizationConfig rc = oc;
    rc.seed = derive_seed(oc.seed, r);
    out.seed = rc.seed;
    char name[32];
    std::snprintf(name, sizeof(name), "restart_%02zu", r);
    const std::filesystem::path rdir = dir / name;
    try {
      TraceWriter writer(rdir / "trace.jsonl");
      OptimizationTrace trace = optimize_pattern(rc, family, objective, palette ? &*palette : nullptr,
                                                 [&](const IterationRecord& rec) { writer.append(rec); });
      write_params(rdir / "best_params.json", trace.best_params);
      write_png(rdir / "best.png", rasterize(trace.best_params, settings.canvas, settings.canvas, settings.softness).pixels);
      out.trace = std::move(trace);
    } catch (const std::exception& e) {
      out.status = e.what();
      const std::lock_guard lock(log_mutex);
      std::cerr << "warning: restart " << r << " failed: " << e.what() << "\n";
    }
  });

  Json restarts = Json::array();
  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    const Outcome& out = outcomes[r];
    Json j{{"restart", r}, {"seed", out.seed}, {"status", out.status}};
    if (out.trace) {
      j["best_accuracy"] = out.trace->best_accuracy;
      j["best_index"] = out.trace->best_index;
      j["iterations"] = out.trace->iterations.size();
      j["stop_reason"] = out.trace->stop_reason;
      if (!best || out.trace->best_accuracy < outcomes[*best].trace->best_accuracy) best = r;
    }
    restarts.push_back(j);
  }
  Json summary{{"command", "optimize"}, {"model", model.name}, {"family", to_string(family)},
               {"mode", to_string(oc.mode)}, {"backend", to_string(oc.backend)},
               {"threshold", *model.threshold}, {"baseline", model.baseline ? Json(*model.baseline) : Json()},
               {"restarts", restarts}};
  if (!best) {
    summary["status"] = "all restarts failed";
    write_json_file(dir / "summary.json", summary);
    std::cerr << "error: all " << o.restarts << " restarts failed\n";
    return 1;
  }
  const OptimizationTrace& bt = *outcomes[*best].trace;
  summary["status"] = "ok";
  summary["best_restart"] = *best;
  summary["best_accuracy"] = bt.best_accuracy;
  summary["best_params"] = to_json(bt.best_params);
  write_json_file(dir / "summary.json", summary);
  write_params(dir / "best_params.json", bt.best_params);
  write_png(dir / "best.png", rasterize(bt.best_params, settings.canvas, settings.canvas, settings.softness).pixels);

  std::cout << "best restart " << *best << " of " << o.restarts << ": accuracy " << format_fixed(bt.best_accuracy)
            << " (clean baseline " << (model.baseline ? format_fixed(*model.baseline) : std::string("n/a")) << ")\n"
            << to_json(bt.best_params).dump(2) << "\n"
            << "run directory: " << dir.string() << "\n";
  return 0;
}

int cmd_evaluate(const GlobalOptions& g, const EvaluateOptions& o) {
  ExperimentConfig cfg = effective_config(g);
  std::vector<std::pair<std::string, PatternParams>> patterns;
  for (const auto& p : o.params) patterns.emplace_back(label_of(p), read_params(p));
  Json listed = Json::array();
  for (const auto& p : o.params) listed.push_back(p.string());
  cfg.raw["evaluate"] = {{"params", listed}};
  if (g.dry_run) {
    print_plan("evaluate", cfg, {"patterns: " + std::to_string(patterns.size())});
    return 0;
  }
  const int jobs = jobs_of(g);
  const Context ctx = load_context(cfg, jobs);
  const EvalSettings settings = eval_settings(cfg, jobs);
  const std::filesystem::path dir = run_dir(g, "evaluate", cfg);
  save_thresholds_if_calibrated(ctx, dir);

  const std::vector<SimilaritySummaryRow> sims = similarity_summary(patterns, ctx.models, ctx.pairs, settings);
  write_similarity_table(dir / "similarity.tsv", sims);

  ReportInputs in;
  in.model_order = model_order(ctx);
  in.similarity = sims;
  if (!patterns.empty()) {
    // Every pattern on every model, laid out as a transfer table whose
    // optimization model is the pattern label.
    std::vector<PatternEntry> entries;
    std::vector<std::string> labels;
    for (const auto& [label, p] : patterns) {
      if (std::find(labels.begin(), labels.end(), label) != labels.end())
        throw ConfigError("duplicate pattern label '" + label + "'");
      labels.push_back(label);
      entries.push_back({label, p, label});
    }
    const TransferMatrix m = run_transfer_matrix(entries, labels, ctx.models, ctx.pairs, settings);
    write_transfer_table(dir / "evaluate.tsv", m);
    in.transfer = m;
  }
  write_report(dir, in);
  return 0;
}

int cmd_random_baseline(const GlobalOptions& g, const BaselineOptions& o) {
  ExperimentConfig cfg = effective_config(g);
  cfg.raw["random_baseline"] = {{"patterns", o.patterns}, {"identities", o.identities}};
  if (g.dry_run) {
    print_plan("random-baseline", cfg,
               {"patterns: " + std::to_string(o.patterns) + ", identities: " +
                (o.identities ? std::to_string(o.identities) : std::string("all"))});
    return 0;
  }
  const int jobs = jobs_of(g);
  const Context ctx = load_context(cfg, jobs);
  const int identities =
      o.identities > 0 ? o.identities : static_cast<int>(mated_pairs(ctx.pairs, {}).size());
  const BaselineStats stats =
      run_random_baseline(ctx.models, ctx.pairs, o.patterns, identities, cfg.seed, eval_settings(cfg, jobs));
  const std::filesystem::path dir = run_dir(g, "random-baseline", cfg);
  save_thresholds_if_calibrated(ctx, dir);
  write_baseline_table(dir / "baseline.tsv", stats);
  ReportInputs in;
  in.model_order = model_order(ctx);
  in.baseline = stats;
  write_report(dir, in);
  return 0;
}

int cmd_neighborhood(const GlobalOptions& g, const NeighborhoodOptions& o) {
  ExperimentConfig cfg = effective_config(g);
  const PatternParams center = read_params(o.params);
  cfg.raw["neighborhood"] = {{"params", o.params.string()},
                             {"neighbors", o.neighbors},
                             {"delta_color", o.deltas.color},
                             {"delta_width_px", o.deltas.width_px},
                             {"delta_angle_deg", o.deltas.angle_deg}};
  if (g.dry_run) {
    print_plan("neighborhood", cfg, {"center: " + o.params.string(), "neighbors: " + std::to_string(o.neighbors)});
    return 0;
  }
  const int jobs = jobs_of(g);
  const Context ctx = load_context(cfg, jobs);
  const NeighborhoodResult r = run_neighborhood_check(center, ctx.models, ctx.pairs, o.neighbors, o.deltas,
                                                      cfg.seed, eval_settings(cfg, jobs));
  const std::filesystem::path dir = run_dir(g, "neighborhood", cfg);
  save_thresholds_if_calibrated(ctx, dir);
  write_neighborhood_table(dir / "neighborhood.tsv", r);
  ReportInputs in;
  in.model_order = model_order(ctx);
  in.neighborhood = r;
  write_report(dir, in);
  return 0;
}

int cmd_transfer_matrix(const GlobalOptions& g, const TransferOptions& o) {
  ExperimentConfig cfg = effective_config(g);
  if (o.patterns.empty()) throw ConfigError("transfer-matrix needs at least one --pattern MODEL=PATH");
  std::vector<PatternEntry> entries;
  Json listed = Json::array();
  for (const std::string& s : o.patterns) {
    const auto [model, path] = split_assignment(s, "--pattern");
    entries.push_back({model, read_params(path), path});
    listed.push_back(s);
  }
  cfg.raw["transfer"] = {{"patterns", listed}};
  if (g.dry_run) {
    print_plan("transfer-matrix", cfg, {"patterns: " + std::to_string(entries.size())});
    return 0;
  }
  const int jobs = jobs_of(g);
  const Context ctx = load_context(cfg, jobs);
  std::vector<std::string> opt_models;
  for (const ModelHandle& m : ctx.models)
    for (const PatternEntry& e : entries)
      if (e.opt_model == m.name) {
        opt_models.push_back(m.name);
        break;
      }
  for (const PatternEntry& e : entries) find_model(ctx, e.opt_model);
  const TransferMatrix m = run_transfer_matrix(entries, opt_models, ctx.models, ctx.pairs, eval_settings(cfg, jobs));
  const std::filesystem::path dir = run_dir(g, "transfer-matrix", cfg);
  save_thresholds_if_calibrated(ctx, dir);
  write_transfer_table(dir / "transfer.tsv", m);
  ReportInputs in;
  in.model_order = model_order(ctx);
  in.transfer = m;
  write_report(dir, in);
  return 0;
}

int cmd_ingest(const GlobalOptions& g, const IngestOptions& o) {
  ExperimentConfig cfg = effective_config(g);
  const std::vector<ExternalRecord> records = read_external_manifest(o.manifest);
  std::map<std::string, PatternParams> simulated;
  Json listed = Json::array();
  for (const std::string& s : o.simulated) {
    const auto [id, path] = split_assignment(s, "--simulated");
    simulated[id] = read_params(path);
    listed.push_back(s);
  }
  cfg.raw["ingest"] = {{"manifest", o.manifest.string()}, {"simulated", listed}};
  if (g.dry_run) {
    print_plan("ingest", cfg, {"manifest: " + o.manifest.string() + " (" + std::to_string(records.size()) + " records)"});
    return 0;
  }
  const int jobs = jobs_of(g);
  const Context ctx = load_context(cfg, jobs);
  const ExternalTable table =
      evaluate_external(records, o.manifest.parent_path(), ctx.models, ctx.dataset, cfg.preprocess, jobs);
  const std::filesystem::path dir = run_dir(g, "ingest", cfg);
  save_thresholds_if_calibrated(ctx, dir);
  write_external_table(dir / "external.tsv", table);

  ReportInputs in;
  in.model_order = model_order(ctx);
  in.external = table;
  if (!simulated.empty()) {
    // Per (pattern, model) accuracy: simulated blend vs generated images.
    const EvalSettings settings = eval_settings(cfg, jobs);
    std::vector<double> sim_acc, gen_acc;
    for (const auto& [id, params] : simulated) {
      const PatternImage img = rasterize(params, settings.canvas, settings.canvas, settings.softness);
      for (const ModelHandle& m : ctx.models) {
        int n = 0;
        double correct = 0.0;
        for (const ExternalRow& row : table.rows)
          if (row.pattern_id == id && row.model == m.name && row.stage == "generated") {
            correct += row.accuracy * row.comparisons;
            n += row.comparisons;
          }
        if (n == 0) continue;
        sim_acc.push_back(MatedScorer(m, ctx.pairs).rate(&img, &settings.blend));
        gen_acc.push_back(correct / n);
      }
    }
    if (sim_acc.size() >= 2) in.simulated_vs_generated = paired_t_test(sim_acc, gen_acc);
    else std::cerr << "warning: fewer than two simulated/generated pairs; t-test skipped\n";
  }
  write_report(dir, in);
  return 0;
}

int cmd_render_pattern(const GlobalOptions& g, const RenderOptions& o) {
  const PatternParams p = read_params(o.params);
  if (o.size < 16) throw ConfigError("--size must be >= 16");
  double softness = kDefaultSoftness;
  std::filesystem::path out_dir = g.out ? *g.out : std::filesystem::path("runs");
  std::optional<ExperimentConfig> cfg;
  if (!g.config.empty()) {
    cfg = effective_config(g);
    softness = cfg->softness;
    out_dir = cfg->output_dir;
  }
  std::filesystem::path target;
  if (o.output) target = *o.output;
  if (g.dry_run) {
    std::cout << "dry run: render-pattern " << o.params.string() << " at " << o.size << "x" << o.size << "\n";
    return 0;
  }
  if (target.empty()) {
    ExperimentConfig c = cfg ? *cfg : ExperimentConfig{};
    if (!cfg) c.raw = Json{{"params", to_json(p)}, {"size", o.size}};
    target = make_run_dir(out_dir, "render-pattern", c, g.run_name) / "pattern.png";
  }
  write_png(target, rasterize(p, o.size, o.size, softness).pixels);
  std::cout << "wrote " << target.string() << "\n";
  return 0;
}

int cmd_make_toy_data(const GlobalOptions& g, const ToyDataOptions& o) {
  ToyDatasetOptions opt;
  opt.identities = o.identities;
  opt.seed = g.seed.value_or(o.seed);
  if (o.identities < 2) throw ConfigError("--identities must be >= 2");
  if (g.dry_run) {
    std::cout << "dry run: make-toy-data " << o.identities << " identities into " << o.output.string() << "\n";
    return 0;
  }
  const auto manifest = generate_toy_dataset(o.output, opt);
  std::cout << "wrote " << manifest.string() << "\n";
  return 0;
}

int cmd_train_toy(const GlobalOptions& g, const TrainToyOptions& o) {
  if (o.epochs < 0) throw ConfigError("--epochs must be >= 0");
  if (!std::filesystem::exists(o.dataset)) throw ConfigError("dataset manifest not found: " + o.dataset.string());
  if (g.dry_run) {
    std::cout << "dry run: train-toy '" << o.name << "' on " << o.dataset.string() << " for " << o.epochs
              << " epochs\n";
    return 0;
  }
  ToyTrainOptions opt;
  opt.epochs = o.epochs;
  opt.seed = g.seed.value_or(0);
  const FaceDataset ds = load_dataset(o.dataset, PreprocessConfig{}, jobs_of(g));
  const ToyTrainingResult r = train_toy_model(ds, opt, o.name);
  const auto& net = static_cast<const ToyEmbeddingNet&>(*r.handle.model);
  net.save(o.weights);
  std::cout << o.name << ": held-out accuracy " << format_fixed(r.heldout_accuracy) << ", mated rate "
            << format_fixed(r.heldout_mated_rate) << ", threshold " << format_fixed(*r.handle.threshold, 6)
            << ", checksum " << hex64(net.checksum()) << "\n";
  if (o.registry) {
    std::vector<AdapterSpec> specs;
    if (std::filesystem::exists(*o.registry)) specs = read_registry(*o.registry);
    std::erase_if(specs, [&](const AdapterSpec& s) { return s.name == o.name; });
    specs.push_back({o.name, "toy", std::filesystem::absolute(o.weights).string(), net.profile()});
    write_registry(*o.registry, specs);
  }
  return 0;
}

}  // namespace facecamo::cli
