#include "facecamo/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "facecamo/errors.hpp"

namespace facecamo {

Json to_json(const PatternParams& p) {
  Json colors = Json::array();
  for (const Color& c : p.colors) colors.push_back({c[0], c[1], c[2]});
  return Json{{"family", to_string(p.family)},
              {"width_frac", p.width_frac},
              {"angle", p.angle},
              {"colors", colors},
              {"phase", p.phase},
              {"mode", to_string(p.mode)}};
}

PatternParams params_from_json(const Json& j) {
  try {
    PatternParams p;
    p.family = parse_family(j.at("family").get<std::string>());
    p.width_frac = j.at("width_frac").get<double>();
    p.angle = j.at("angle").get<double>();
    p.phase = j.value("phase", 0.0);
    p.mode = parse_mode(j.value("mode", std::string("unconstrained")));
    p.colors.clear();
    for (const Json& c : j.at("colors")) {
      if (c.size() != 3) throw ConfigError("pattern color must have three channels");
      p.colors.push_back({c[0].get<double>(), c[1].get<double>(), c[2].get<double>()});
    }
    if (p.colors.size() < 2) throw ConfigError("pattern needs at least two colors");
    return p;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed pattern parameters: ") + e.what());
  }
}

Json to_json(const Palette& pal) {
  Json refs = Json::array();
  for (const Color& c : pal.reference_colors) refs.push_back({c[0], c[1], c[2]});
  return Json{{"reference_colors", refs}, {"tolerance", pal.tolerance}};
}

Palette palette_from_json(const Json& j) {
  try {
    Palette pal;
    pal.tolerance = j.value("tolerance", 4.0);
    for (const Json& c : j.at("reference_colors")) {
      if (c.size() != 3) throw ConfigError("palette color must have three channels");
      pal.reference_colors.push_back({c[0].get<double>(), c[1].get<double>(), c[2].get<double>()});
    }
    validate(pal);
    return pal;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed palette: ") + e.what());
  }
}

namespace {

void expect_schema(const Json& j, const std::string& schema, const std::filesystem::path& path) {
  if (!j.is_object() || !j.contains("schema") || j["schema"] != schema)
    throw DataError(path.string() + ": expected schema '" + schema + "'");
}

}  // namespace

void write_params(const std::filesystem::path& path, const PatternParams& p) {
  Json j = to_json(p);
  j["schema"] = kParamsSchema;
  write_json_file(path, j);
}

PatternParams read_params(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  expect_schema(j, kParamsSchema, path);
  return params_from_json(j);
}

void write_palette(const std::filesystem::path& path, const Palette& pal) {
  Json j = to_json(pal);
  j["schema"] = kPaletteSchema;
  write_json_file(path, j);
}

Palette read_palette(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  expect_schema(j, kPaletteSchema, path);
  return palette_from_json(j);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("file not found: " + path.string());
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<Json> read_jsonl(const std::filesystem::path& path, const std::string& schema) {
  std::istringstream in(read_text_file(path));
  std::vector<Json> records;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON");
    }
    if (!header) {
      expect_schema(j, schema, path);
      header = true;
      continue;
    }
    records.push_back(std::move(j));
  }
  if (!header) throw DataError(path.string() + ": missing schema header line");
  return records;
}

void write_jsonl(const std::filesystem::path& path, const std::string& schema,
                 const std::vector<Json>& records) {
  std::string text = Json{{"schema", schema}}.dump() + "\n";
  for (const Json& r : records) text += r.dump() + "\n";
  write_text_file(path, text);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace facecamo
