#include "negsuite/catalog.hpp"

#include <algorithm>

#include <json.hpp>

#include "negsuite/errors.hpp"

namespace negsuite {

extern const char* const kEmbeddedCatalogJson;

std::vector<std::string> placeholders(std::string_view pattern) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = pattern.find('{', pos)) != std::string_view::npos) {
    auto end = pattern.find('}', pos);
    if (end == std::string_view::npos) break;
    out.emplace_back(pattern.substr(pos + 1, end - pos - 1));
    pos = end + 1;
  }
  return out;
}

std::string render(std::string_view pattern, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    auto open = pattern.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(pattern.substr(pos));
      break;
    }
    auto close = pattern.find('}', open);
    if (close == std::string_view::npos) throw ContractError("unterminated placeholder");
    out.append(pattern.substr(pos, open - pos));
    std::string key(pattern.substr(open + 1, close - open - 1));
    auto it = values.find(key);
    if (it == values.end()) throw ContractError("no value for placeholder {" + key + "}");
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

namespace {

void check_pattern(const std::string& pattern, std::vector<std::string> expected) {
  auto found = placeholders(pattern);
  std::sort(found.begin(), found.end());
  std::sort(expected.begin(), expected.end());
  if (found != expected) throw InputError("catalog pattern has wrong placeholders: " + pattern);
}

std::vector<std::string> patterns(const nlohmann::json& j, const char* key,
                                  const std::vector<std::string>& slots) {
  if (!j.contains(key) || !j[key].is_array()) throw InputError(std::string("catalog: missing ") + key);
  std::vector<std::string> out;
  for (const auto& p : j[key]) {
    out.push_back(p.get<std::string>());
    check_pattern(out.back(), slots);
  }
  return out;
}

std::string pattern(const nlohmann::json& j, const char* key,
                    const std::vector<std::string>& slots) {
  if (!j.contains(key) || !j[key].is_string()) throw InputError(std::string("catalog: missing ") + key);
  auto p = j[key].get<std::string>();
  check_pattern(p, slots);
  return p;
}

TemplateCatalog parse_catalog_document(const nlohmann::json& j) {
  if (j.value("format", "") != "negsuite-catalog") throw InputError("catalog: wrong format tag");
  TemplateCatalog c;
  c.version = j.value("version", 0);
  if (c.version != 1) throw InputError("catalog: unsupported version");
  c.retrieval_negation = pattern(j, "retrieval_negation", {"x"});
  const auto& mcq = j.at("mcq");
  c.mcq_affirmation = mcq.at("affirmation").get<std::vector<std::string>>();
  if (c.mcq_affirmation.size() != 2) throw InputError("catalog: need two affirmation patterns");
  // The second affirmation pattern carries the optional second object.
  check_pattern(c.mcq_affirmation[0], {"A"});
  check_pattern(c.mcq_affirmation[1], {"A", "C"});
  c.mcq_negation = patterns(mcq, "negation", {"B"});
  c.mcq_hybrid = patterns(mcq, "hybrid", {"A", "B"});
  const auto& bin = j.at("binary");
  c.binary_affirmation = pattern(bin, "affirmation", {"x"});
  c.binary_negation = pattern(bin, "negation", {"x"});
  c.toy_caption = pattern(j, "toy_caption", {"objects"});
  c.negation_cues = j.at("negation_cues").get<std::vector<std::string>>();
  c.toy_function_tokens = j.at("toy_function_tokens").get<std::vector<std::string>>();
  const auto& bat = j.at("battery");
  c.battery.affirm_single = patterns(bat, "affirm_single", {"A"});
  c.battery.neg_single = patterns(bat, "neg_single", {"A"});
  c.battery.affirm_two = patterns(bat, "affirm_two", {"A", "B"});
  c.battery.hybrid = patterns(bat, "hybrid", {"A", "B"});
  c.battery.double_neg = patterns(bat, "double_neg", {"A", "B"});
  return c;
}

}  // namespace

TemplateCatalog parse_catalog(std::string_view json_text) {
  try {
    return parse_catalog_document(nlohmann::json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("catalog: ") + e.what());
  }
}

const TemplateCatalog& default_catalog() {
  static const TemplateCatalog catalog = parse_catalog(kEmbeddedCatalogJson);
  return catalog;
}

}  // namespace negsuite
