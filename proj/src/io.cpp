#include "negsuite/io.hpp"

#include <fstream>
#include <set>
#include <system_error>

#include <unistd.h>

#include "negsuite/errors.hpp"

namespace negsuite {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("rename to " + path.string() + " failed: " + ec.message());
  }
}

nlohmann::json parse_json_line(const std::string& line, std::size_t lineno) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(lineno, std::string("invalid JSON: ") + e.what());
  }
}

nlohmann::ordered_json provenance_header(std::string_view format, std::uint64_t seed) {
  nlohmann::ordered_json h;
  h["format"] = format;
  h["version"] = 1;
  h["tool"] = kToolVersion;
  h["seed"] = seed;
  return h;
}

namespace {

std::vector<std::string> names(const ConceptSet& set) {
  std::vector<std::string> out;
  for (const auto& c : set) out.push_back(c.name());
  return out;
}

std::vector<std::string> string_array(const nlohmann::json& j, const char* key,
                                      std::size_t lineno, bool required) {
  std::vector<std::string> out;
  if (!j.contains(key)) {
    if (required) throw FormatError(lineno, std::string("missing field ") + key);
    return out;
  }
  if (!j[key].is_array()) throw FormatError(lineno, std::string(key) + " must be an array");
  for (const auto& x : j[key]) {
    if (!x.is_string()) throw FormatError(lineno, std::string(key) + " must hold strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

std::string string_field(const nlohmann::json& j, const char* key, std::size_t lineno) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw FormatError(lineno, std::string("missing string field ") + key);
  }
  return j[key].get<std::string>();
}

ConceptSet concept_set(const std::vector<std::string>& raw, std::size_t lineno) {
  ConceptSet out;
  for (const auto& s : raw) {
    try {
      out.emplace(s);
    } catch (const ContractError&) {
      throw FormatError(lineno, "empty concept name");
    }
  }
  return out;
}

}  // namespace

nlohmann::ordered_json to_json(const SceneRecord& scene) {
  nlohmann::ordered_json j;
  j["id"] = scene.id;
  j["positives"] = names(scene.positives);
  j["negatives"] = names(scene.negative_candidates);
  j["captions"] = scene.captions;
  if (scene.media_ref) j["media"] = *scene.media_ref;
  return j;
}

nlohmann::ordered_json to_json(const CaptionRecord& caption) {
  nlohmann::ordered_json j;
  j["id"] = caption.id;
  j["sceneId"] = caption.scene_id;
  j["text"] = caption.text;
  j["polarity"] = to_string(caption.polarity);
  j["affirmed"] = names(caption.affirmed);
  j["negated"] = names(caption.negated);
  return j;
}

nlohmann::ordered_json to_json(const MCQItem& item) {
  nlohmann::ordered_json j;
  j["id"] = item.id;
  j["sceneId"] = item.scene_id;
  j["options"] = item.options;
  auto& tmpl = j["optionTemplate"] = nlohmann::ordered_json::array();
  for (auto t : item.option_template) tmpl.push_back(to_string(t));
  auto& truth = j["optionTruth"] = nlohmann::ordered_json::array();
  for (auto t : item.option_truth) truth.push_back(to_string(t));
  j["correctIndex"] = item.correct_index;
  return j;
}

SceneRecord scene_from_json(const nlohmann::json& j, std::size_t lineno) {
  if (!j.is_object()) throw FormatError(lineno, "scene must be a JSON object");
  SceneRecord s;
  s.id = string_field(j, "id", lineno);
  if (s.id.empty()) throw FormatError(lineno, "empty scene id");
  s.positives = concept_set(string_array(j, "positives", lineno, true), lineno);
  s.negative_candidates = concept_set(string_array(j, "negatives", lineno, false), lineno);
  s.captions = string_array(j, "captions", lineno, false);
  if (j.contains("media")) s.media_ref = string_field(j, "media", lineno);
  try {
    s.validate();
  } catch (const ContractError& e) {
    throw FormatError(lineno, e.what());
  }
  return s;
}

CaptionRecord caption_from_json(const nlohmann::json& j, std::size_t lineno) {
  if (!j.is_object()) throw FormatError(lineno, "caption must be a JSON object");
  CaptionRecord c;
  c.id = string_field(j, "id", lineno);
  c.scene_id = string_field(j, "sceneId", lineno);
  c.text = string_field(j, "text", lineno);
  try {
    c.polarity = parse_polarity(string_field(j, "polarity", lineno));
  } catch (const InputError& e) {
    throw FormatError(lineno, e.what());
  }
  c.affirmed = concept_set(string_array(j, "affirmed", lineno, false), lineno);
  c.negated = concept_set(string_array(j, "negated", lineno, false), lineno);
  return c;
}

MCQItem mcq_from_json(const nlohmann::json& j, std::size_t lineno) {
  if (!j.is_object()) throw FormatError(lineno, "MCQ item must be a JSON object");
  MCQItem m;
  m.id = string_field(j, "id", lineno);
  m.scene_id = string_field(j, "sceneId", lineno);
  m.options = string_array(j, "options", lineno, true);
  try {
    for (const auto& t : string_array(j, "optionTemplate", lineno, true)) {
      m.option_template.push_back(parse_template_type(t));
    }
    for (const auto& t : string_array(j, "optionTruth", lineno, true)) {
      m.option_truth.push_back(parse_option_truth(t));
    }
  } catch (const InputError& e) {
    if (dynamic_cast<const FormatError*>(&e)) throw;
    throw FormatError(lineno, e.what());
  }
  if (!j.contains("correctIndex") || !j["correctIndex"].is_number_unsigned()) {
    throw FormatError(lineno, "correctIndex must be a non-negative integer");
  }
  m.correct_index = j["correctIndex"].get<std::size_t>();
  try {
    m.validate();
  } catch (const ContractError& e) {
    throw FormatError(lineno, e.what());
  }
  return m;
}

std::vector<std::pair<std::size_t, nlohmann::json>> read_jsonl(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::pair<std::size_t, nlohmann::json>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = parse_json_line(line, lineno);
    if (lineno == 1 && j.is_object() && j.contains("format")) continue;
    out.emplace_back(lineno, std::move(j));
  }
  return out;
}

std::vector<SceneRecord> read_scenes(const std::filesystem::path& path) {
  std::vector<SceneRecord> scenes;
  std::set<std::string> seen;
  for (const auto& [lineno, j] : read_jsonl(path)) {
    auto s = scene_from_json(j, lineno);
    if (!seen.insert(s.id).second) throw FormatError(lineno, "duplicate scene id " + s.id);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::vector<MCQItem> read_mcq_items(const std::filesystem::path& path) {
  std::vector<MCQItem> items;
  for (const auto& [lineno, j] : read_jsonl(path)) items.push_back(mcq_from_json(j, lineno));
  return items;
}

std::vector<CaptionRecord> read_captions(const std::filesystem::path& path) {
  std::vector<CaptionRecord> out;
  for (const auto& [lineno, j] : read_jsonl(path)) out.push_back(caption_from_json(j, lineno));
  return out;
}

}  // namespace negsuite
