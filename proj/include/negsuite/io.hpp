#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "negsuite/core.hpp"

namespace negsuite {

inline constexpr std::string_view kToolVersion = "negsuite 0.1.0";

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Parses one JSONL line; malformed JSON becomes FormatError(lineno).
nlohmann::json parse_json_line(const std::string& line, std::size_t lineno);

// Header object for JSONL outputs: {"format":..., "version":1, "tool":..., "seed":...}.
nlohmann::ordered_json provenance_header(std::string_view format, std::uint64_t seed);

nlohmann::ordered_json to_json(const SceneRecord& scene);
nlohmann::ordered_json to_json(const CaptionRecord& caption);
nlohmann::ordered_json to_json(const MCQItem& item);
SceneRecord scene_from_json(const nlohmann::json& j, std::size_t lineno);
CaptionRecord caption_from_json(const nlohmann::json& j, std::size_t lineno);
MCQItem mcq_from_json(const nlohmann::json& j, std::size_t lineno);

// Reads a JSONL file, skipping an optional first line carrying a "format" key.
// Returns (line number, object) pairs.
std::vector<std::pair<std::size_t, nlohmann::json>> read_jsonl(const std::filesystem::path& path);

// Scene files: one SceneRecord per line
// {"id","positives":[..],"negatives":[..],"captions":[..],"media":".."}.
// Duplicate ids and overlapping positive/negative sets are FormatErrors.
std::vector<SceneRecord> read_scenes(const std::filesystem::path& path);
std::vector<MCQItem> read_mcq_items(const std::filesystem::path& path);
std::vector<CaptionRecord> read_captions(const std::filesystem::path& path);

}  // namespace negsuite
