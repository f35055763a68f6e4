#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace negsuite {

struct TemplateBatteryPatterns {
  std::vector<std::string> affirm_single;  // {A}
  std::vector<std::string> neg_single;     // {A}
  std::vector<std::string> affirm_two;     // {A}, {B}
  std::vector<std::string> hybrid;         // {A} affirmed, {B} negated
  std::vector<std::string> double_neg;     // {A}, {B}
};

// Versioned sentence patterns shared by synthesis, the toy world, and the
// diagnostics battery. Placeholders are written {A}, {B}, {C}, {x}.
struct TemplateCatalog {
  int version = 0;
  std::string retrieval_negation;
  std::vector<std::string> mcq_affirmation;  // [0]: {A}; [1]: {A} and {C}
  std::vector<std::string> mcq_negation;     // {B}
  std::vector<std::string> mcq_hybrid;       // {A}, {B}
  std::string binary_affirmation;            // {x}
  std::string binary_negation;               // {x}
  std::string toy_caption;                   // {objects}
  std::vector<std::string> negation_cues;
  std::vector<std::string> toy_function_tokens;
  TemplateBatteryPatterns battery;
};

// Parses and validates a catalog document: every pattern must contain each
// placeholder of its slot exactly once. Throws InputError.
TemplateCatalog parse_catalog(std::string_view json_text);

// The catalog compiled into the library from data/catalog.json.
const TemplateCatalog& default_catalog();

// Substitutes {key} placeholders. Throws ContractError when a placeholder in
// the pattern has no value.
std::string render(std::string_view pattern, const std::map<std::string, std::string>& values);

// Names of the {..} placeholders in `pattern`, in order of appearance.
std::vector<std::string> placeholders(std::string_view pattern);

}  // namespace negsuite
