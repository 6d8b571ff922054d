#include "experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <set>

#include "facecamo/errors.hpp"

namespace facecamo::cli {

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path fp(p);
  return (fp.is_absolute() ? fp : base / fp).lexically_normal();
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

void require_exists(const std::filesystem::path& p, const std::string& what) {
  if (!std::filesystem::exists(p)) throw ConfigError(what + " not found: " + p.string());
}

template <typename T>
T get(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + ": '" + key + "' has the wrong type");
  }
}

}  // namespace

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  require_exists(path, "config file");
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": config must be a JSON object");
  const std::string where = path.string();
  if (j.value("schema", std::string()) != kExperimentSchema)
    throw ConfigError(where + ": expected schema " + kExperimentSchema);
  reject_unknown(j,
                 {"schema", "dataset", "registry", "thresholds", "palette", "output_dir", "seed", "pairs_seed",
                  "recalibrate", "overlay_threshold", "force_overlay", "softness", "preprocess", "optimization"},
                 where);

  if (auto v = env("FACECAMO_DATASET")) j["dataset"] = *v;
  if (auto v = env("FACECAMO_REGISTRY")) j["registry"] = *v;
  if (auto v = env("FACECAMO_THRESHOLDS")) j["thresholds"] = *v;
  if (auto v = env("FACECAMO_PALETTE")) j["palette"] = *v;
  if (auto v = env("FACECAMO_OUTPUT_DIR")) j["output_dir"] = *v;
  if (auto v = env("FACECAMO_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long s = std::stoull(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trailing characters");
      j["seed"] = s;
    } catch (const std::exception&) {
      throw ConfigError("FACECAMO_SEED is not a non-negative integer: " + *v);
    }
  }

  ExperimentConfig cfg;
  cfg.source = path;
  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();
  if (!j.contains("dataset")) throw ConfigError(where + ": 'dataset' is required");
  if (!j.contains("registry")) throw ConfigError(where + ": 'registry' is required");
  cfg.dataset = resolve(base, get<std::string>(j, "dataset", "", where));
  cfg.registry = resolve(base, get<std::string>(j, "registry", "", where));
  if (j.contains("thresholds")) cfg.thresholds = resolve(base, get<std::string>(j, "thresholds", "", where));
  if (j.contains("palette")) cfg.palette = resolve(base, get<std::string>(j, "palette", "", where));
  cfg.output_dir = resolve(base, get<std::string>(j, "output_dir", "runs", where));
  cfg.seed = get<std::uint64_t>(j, "seed", 0, where);
  cfg.pairs_seed = get<std::uint64_t>(j, "pairs_seed", 0, where);
  cfg.recalibrate = get<bool>(j, "recalibrate", false, where);
  cfg.blend.overlay_threshold = get<double>(j, "overlay_threshold", 0.4, where);
  cfg.blend.force = get<bool>(j, "force_overlay", false, where);
  cfg.softness = get<double>(j, "softness", kDefaultSoftness, where);
  if (!(cfg.softness > 0.0)) throw ConfigError(where + ": softness must be positive");
  validate(cfg.blend);

  if (j.contains("preprocess")) {
    const Json& p = j["preprocess"];
    reject_unknown(p, {"canvas", "regions"}, where + " preprocess");
    cfg.preprocess.canvas = get<int>(p, "canvas", kCanonicalCanvas, where);
    if (p.contains("regions")) {
      cfg.preprocess.regions.clear();
      for (const std::string& r : get<std::vector<std::string>>(p, "regions", {}, where))
        cfg.preprocess.regions.push_back(parse_region(r));
    }
  }
  if (cfg.preprocess.canvas < 16) throw ConfigError(where + ": canvas must be >= 16");

  OptimizationConfig& o = cfg.optimization;
  if (j.contains("optimization")) {
    const Json& oj = j["optimization"];
    reject_unknown(oj,
                   {"max_iterations", "early_stop_window", "batch_size", "lr_max", "lr_min", "mode",
                    "clamping_interval", "backend", "full_eval_interval", "num_colors"},
                   where + " optimization");
    o.max_iterations = get<int>(oj, "max_iterations", o.max_iterations, where);
    o.early_stop_window = get<int>(oj, "early_stop_window", o.early_stop_window, where);
    o.batch_size = get<int>(oj, "batch_size", o.batch_size, where);
    o.lr_max = get<double>(oj, "lr_max", o.lr_max, where);
    o.lr_min = get<double>(oj, "lr_min", o.lr_min, where);
    o.mode = parse_mode(get<std::string>(oj, "mode", std::string(to_string(o.mode)), where));
    o.clamping_interval = get<int>(oj, "clamping_interval", o.clamping_interval, where);
    o.backend = parse_backend(get<std::string>(oj, "backend", std::string(to_string(o.backend)), where));
    o.full_eval_interval = get<int>(oj, "full_eval_interval", o.full_eval_interval, where);
    o.num_colors = get<int>(oj, "num_colors", o.num_colors, where);
  }
  o.overlay_threshold = cfg.blend.overlay_threshold;
  o.softness = cfg.softness;
  o.seed = cfg.seed;
  validate(o);

  require_exists(cfg.dataset, "dataset manifest");
  require_exists(cfg.registry, "model registry");
  if (cfg.thresholds) require_exists(*cfg.thresholds, "threshold sidecar");
  if (cfg.palette) require_exists(*cfg.palette, "palette");
  if (o.mode == Mode::kConstrained && !cfg.palette)
    throw ConfigError(where + ": constrained mode requires 'palette'");

  cfg.raw = j;
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  Json j = cfg.raw;
  j["seed"] = cfg.seed;
  j["strict_compat"] = cfg.optimization.strict_compat;
  return hex64(fnv1a(j.dump()));
}

std::filesystem::path make_run_dir(const std::filesystem::path& output_dir, const std::string& command,
                                   const ExperimentConfig& cfg, const std::string& run_name) {
  std::string name = run_name;
  if (name.empty()) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", &tm);
    name = command + "-" + stamp + "-" + config_hash(cfg).substr(0, 8);
  }
  const std::filesystem::path dir = output_dir / name;
  std::filesystem::create_directories(dir);
  return dir;
}

Context load_context(const ExperimentConfig& cfg, int jobs) {
  Context ctx;
  std::vector<ModelHandle> models = load_models(read_registry(cfg.registry));
  ctx.dataset = load_dataset(cfg.dataset, cfg.preprocess, jobs);
  ctx.pairs = verification_pairs(ctx.dataset, cfg.pairs_seed);
  ctx.calibration_hash = hex64(pairs_digest(ctx.pairs));
  if (cfg.thresholds && !cfg.recalibrate) {
    ctx.thresholds = read_thresholds(*cfg.thresholds);
    apply_thresholds(models, ctx.thresholds, ctx.calibration_hash);
  } else {
    ctx.thresholds = calibrate_all(models, ctx.pairs, ctx.calibration_hash, jobs);
    for (const ThresholdEntry& e : ctx.thresholds)
      if (e.status != "ok") throw CalibrationError("calibration failed for '" + e.model + "': " + e.status);
    ctx.calibrated_in_memory = true;
  }
  ctx.models = std::move(models);
  return ctx;
}

EvalSettings eval_settings(const ExperimentConfig& cfg, int jobs) {
  EvalSettings s;
  s.canvas = cfg.preprocess.canvas;
  s.softness = cfg.softness;
  s.blend = cfg.blend;
  s.jobs = jobs;
  return s;
}

}  // namespace facecamo::cli
