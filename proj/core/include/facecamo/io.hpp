#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facecamo/pattern.hpp"

namespace facecamo {

using Json = nlohmann::json;

inline constexpr const char* kParamsSchema = "facecamo.pattern_params/v1";
inline constexpr const char* kPaletteSchema = "facecamo.palette/v1";

Json to_json(const PatternParams& p);
PatternParams params_from_json(const Json& j);
Json to_json(const Palette& pal);
Palette palette_from_json(const Json& j);

// Single-document files carry {"schema": ...} at top level.
void write_params(const std::filesystem::path& path, const PatternParams& p);
PatternParams read_params(const std::filesystem::path& path);
void write_palette(const std::filesystem::path& path, const Palette& pal);
Palette read_palette(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; byte-stable for equal input.
void write_json_file(const std::filesystem::path& path, const Json& j);

// Line-delimited JSON. The first line is {"schema": <tag>}; records follow.
// Throws DataError on a missing or different schema tag.
std::vector<Json> read_jsonl(const std::filesystem::path& path, const std::string& schema);
void write_jsonl(const std::filesystem::path& path, const std::string& schema,
                 const std::vector<Json>& records);

// Writes text to a file, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Lower-case hex of a 64-bit value, zero padded.
std::string hex64(std::uint64_t v);

// FNV-1a over a byte string.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace facecamo
