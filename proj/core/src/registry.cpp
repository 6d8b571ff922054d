#include "facecamo/registry.hpp"

#include <set>

#include "facecamo/errors.hpp"
#include "facecamo/io.hpp"
#include "facecamo/parallel.hpp"

namespace facecamo {

namespace {

void check_schema(const Json& j, const char* schema, const std::filesystem::path& path) {
  if (!j.is_object() || j.value("schema", std::string()) != schema)
    throw ConfigError(path.string() + ": expected schema " + schema);
}

}  // namespace

std::vector<AdapterSpec> read_registry(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("model registry not found: " + path.string());
  const Json j = read_json_file(path);
  check_schema(j, kRegistrySchema, path);
  std::vector<AdapterSpec> out;
  std::set<std::string> names;
  try {
    for (const Json& m : j.at("models")) {
      AdapterSpec s;
      s.name = m.at("name").get<std::string>();
      s.adapter = m.at("adapter").get<std::string>();
      const std::filesystem::path w = m.at("weights").get<std::string>();
      s.weights = (w.is_absolute() ? w : std::filesystem::absolute(path).parent_path() / w).lexically_normal().string();
      if (m.contains("profile")) {
        const Json& p = m["profile"];
        s.profile.canvas = p.value("canvas", s.profile.canvas);
        if (p.contains("mean")) s.profile.mean = p["mean"].get<std::array<double, 3>>();
        if (p.contains("stddev")) s.profile.stddev = p["stddev"].get<std::array<double, 3>>();
      }
      if (!names.insert(s.name).second) throw ConfigError(path.string() + ": duplicate model '" + s.name + "'");
      out.push_back(std::move(s));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": malformed registry: " + e.what());
  }
  if (out.empty()) throw ConfigError(path.string() + ": registry lists no models");
  return out;
}

void write_registry(const std::filesystem::path& path, const std::vector<AdapterSpec>& specs) {
  Json models = Json::array();
  for (const AdapterSpec& s : specs) {
    std::filesystem::path w(s.weights);
    if (w.is_absolute()) w = std::filesystem::relative(w, std::filesystem::absolute(path).parent_path());
    models.push_back({{"name", s.name},
                      {"adapter", s.adapter},
                      {"weights", w.generic_string()},
                      {"profile", {{"canvas", s.profile.canvas}, {"mean", s.profile.mean}, {"stddev", s.profile.stddev}}}});
  }
  write_json_file(path, Json{{"schema", kRegistrySchema}, {"models", models}});
}

std::vector<ModelHandle> load_models(const std::vector<AdapterSpec>& specs) {
  std::vector<ModelHandle> out;
  for (const AdapterSpec& s : specs) {
    if (!AdapterRegistry::instance().contains(s.adapter))
      throw ConfigError("model '" + s.name + "': unknown adapter '" + s.adapter + "'");
    if (!std::filesystem::exists(s.weights))
      throw ConfigError("model '" + s.name + "': weights not found: " + s.weights);
    ModelHandle h;
    h.name = s.name;
    h.model = AdapterRegistry::instance().create(s);
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<ThresholdEntry> read_thresholds(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("threshold sidecar not found: " + path.string());
  const Json j = read_json_file(path);
  check_schema(j, kThresholdsSchema, path);
  std::vector<ThresholdEntry> out;
  try {
    for (const Json& e : j.at("entries")) {
      ThresholdEntry t;
      t.model = e.at("model").get<std::string>();
      t.calibration_hash = e.at("calibration_hash").get<std::string>();
      t.status = e.value("status", std::string("ok"));
      if (e.contains("threshold") && !e["threshold"].is_null()) t.threshold = e["threshold"].get<double>();
      if (e.contains("baseline") && !e["baseline"].is_null()) t.baseline = e["baseline"].get<double>();
      out.push_back(std::move(t));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": malformed threshold sidecar: " + e.what());
  }
  return out;
}

void write_thresholds(const std::filesystem::path& path, const std::vector<ThresholdEntry>& entries) {
  Json arr = Json::array();
  for (const ThresholdEntry& t : entries)
    arr.push_back({{"model", t.model},
                   {"calibration_hash", t.calibration_hash},
                   {"status", t.status},
                   {"threshold", t.threshold ? Json(*t.threshold) : Json()},
                   {"baseline", t.baseline ? Json(*t.baseline) : Json()}});
  write_json_file(path, Json{{"schema", kThresholdsSchema}, {"entries", arr}});
}

void apply_thresholds(std::vector<ModelHandle>& models, const std::vector<ThresholdEntry>& entries,
                      const std::string& calibration_hash) {
  for (ModelHandle& m : models) {
    const ThresholdEntry* hit = nullptr;
    for (const ThresholdEntry& e : entries)
      if (e.model == m.name && e.calibration_hash == calibration_hash && e.status == "ok" && e.threshold)
        hit = &e;
    if (!hit)
      throw ConfigError("no calibrated threshold for model '" + m.name + "' on calibration set " +
                        calibration_hash);
    m.threshold = hit->threshold;
    m.baseline = hit->baseline;
  }
}

std::vector<ThresholdEntry> calibrate_all(std::vector<ModelHandle>& models,
                                          const std::vector<VerificationPair>& pairs,
                                          const std::string& calibration_hash, int jobs) {
  std::vector<ThresholdEntry> out(models.size());
  bool safe = true;
  for (const ModelHandle& m : models) safe = safe && m.model && m.model->concurrency_safe();
  parallel_for(models.size(), safe ? jobs : 1, [&](std::size_t i) {
    ThresholdEntry& e = out[i];
    e.model = models[i].name;
    e.calibration_hash = calibration_hash;
    try {
      calibrate_threshold(models[i], pairs);
      e.threshold = models[i].threshold;
      e.baseline = models[i].baseline;
    } catch (const Error& err) {
      e.status = err.what();
    }
  });
  return out;
}

}  // namespace facecamo
