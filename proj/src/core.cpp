#include "negsuite/core.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "negsuite/errors.hpp"
#include "negsuite/io.hpp"

namespace negsuite {

std::string canonicalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

Concept::Concept(std::string_view raw) : name_(canonicalize(raw)) {
  if (name_.empty()) throw ContractError("concept name is empty");
}

std::vector<Concept> to_concepts(const std::vector<std::string>& names) {
  std::vector<Concept> out;
  out.reserve(names.size());
  for (const auto& n : names) out.emplace_back(n);
  return out;
}

void SceneRecord::validate() const {
  if (id.empty()) throw ContractError("scene id is empty");
  for (const auto& c : negative_candidates) {
    if (positives.contains(c)) {
      throw ContractError("scene " + id + ": concept '" + c.name() +
                          "' is both positive and negative");
    }
  }
}

void MCQItem::validate() const {
  const std::size_t c = options.size();
  if (c != 2 && c != 4) throw ContractError("item " + id + ": option count must be 2 or 4");
  if (option_template.size() != c || option_truth.size() != c) {
    throw ContractError("item " + id + ": tag vectors do not match option count");
  }
  if (correct_index >= c) throw ContractError("item " + id + ": correct index out of range");
  std::size_t n_correct = 0;
  for (std::size_t i = 0; i < c; ++i) {
    if (option_truth[i] == OptionTruth::correct) {
      ++n_correct;
      if (i != correct_index) throw ContractError("item " + id + ": correct tag off index");
    }
    for (std::size_t j = i + 1; j < c; ++j) {
      if (options[i] == options[j]) throw ContractError("item " + id + ": duplicate option text");
    }
  }
  if (n_correct != 1) throw ContractError("item " + id + ": expected exactly one correct option");
}

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::affirmative: return "affirmative";
    case Polarity::negated: return "negated";
    case Polarity::hybrid: return "hybrid";
  }
  return "?";
}

std::string_view to_string(TemplateType t) {
  switch (t) {
    case TemplateType::affirmation: return "affirmation";
    case TemplateType::negation: return "negation";
    case TemplateType::hybrid: return "hybrid";
  }
  return "?";
}

std::string_view to_string(OptionTruth t) {
  switch (t) {
    case OptionTruth::correct: return "correct";
    case OptionTruth::false_affirmation: return "false-affirmation";
    case OptionTruth::false_negation: return "false-negation";
    case OptionTruth::false_hybrid: return "false-hybrid";
  }
  return "?";
}

Polarity parse_polarity(std::string_view s) {
  if (s == "affirmative") return Polarity::affirmative;
  if (s == "negated") return Polarity::negated;
  if (s == "hybrid") return Polarity::hybrid;
  throw InputError("unknown polarity: " + std::string(s));
}

TemplateType parse_template_type(std::string_view s) {
  if (s == "affirmation") return TemplateType::affirmation;
  if (s == "negation") return TemplateType::negation;
  if (s == "hybrid") return TemplateType::hybrid;
  throw InputError("unknown template type: " + std::string(s));
}

OptionTruth parse_option_truth(std::string_view s) {
  if (s == "correct") return OptionTruth::correct;
  if (s == "false-affirmation") return OptionTruth::false_affirmation;
  if (s == "false-negation") return OptionTruth::false_negation;
  if (s == "false-hybrid") return OptionTruth::false_hybrid;
  throw InputError("unknown option truth: " + std::string(s));
}

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ContractError("embedding dimension must be positive");
}

void EmbeddingTable::insert(std::string id, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw DimMismatch("entry " + id + " has length " + std::to_string(vec.size()) +
                      ", table dim is " + std::to_string(dim_));
  }
  auto [it, inserted] = entries_.emplace(std::move(id), std::move(vec));
  if (!inserted) throw ContractError("duplicate embedding id: " + it->first);
}

const std::vector<double>& EmbeddingTable::at(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw MissingEmbedding(id);
  return it->second;
}

std::vector<std::string> EmbeddingTable::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimMismatch("dot: vector lengths differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na < 1e-12 || nb < 1e-12) throw ZeroVector("<anonymous>");
  return dot(a, b) / (na * nb);
}

std::vector<double> unit(std::span<const double> v, const std::string& id) {
  const double n = l2_norm(v);
  if (n < 1e-12) throw ZeroVector(id);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

EmbeddingTable normalize_embeddings(const EmbeddingTable& table) {
  EmbeddingTable out(table.dim());
  for (const auto& [id, vec] : table) out.insert(id, unit(vec, id));
  return out;
}

SimilarityMatrix cosine_similarity_matrix(const EmbeddingTable& queries,
                                          const EmbeddingTable& candidates) {
  if (queries.dim() != candidates.dim()) {
    throw DimMismatch("query dim " + std::to_string(queries.dim()) + " != candidate dim " +
                      std::to_string(candidates.dim()));
  }
  SimilarityMatrix sm;
  sm.query_ids = queries.ids();
  sm.candidate_ids = candidates.ids();
  sm.scores.resize(static_cast<Eigen::Index>(queries.size()),
                   static_cast<Eigen::Index>(candidates.size()));
  Eigen::Index j = 0;
  for (const auto& [qid, q] : queries) {
    Eigen::Index k = 0;
    for (const auto& [cid, c] : candidates) sm.scores(j, k++) = dot(q, c);
    ++j;
  }
  return sm;
}

void write_embedding_table(const EmbeddingTable& table, std::ostream& out,
                           const std::map<std::string, std::string>& extra_header) {
  nlohmann::ordered_json header;
  header["format"] = "negsuite-emb";
  header["version"] = 1;
  header["dim"] = table.dim();
  header["count"] = table.size();
  for (const auto& [k, v] : extra_header) header[k] = v;
  out << header.dump() << '\n';
  for (const auto& [id, vec] : table) {
    nlohmann::ordered_json row;
    row["id"] = id;
    row["vec"] = vec;
    out << row.dump() << '\n';
  }
}

void write_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path,
                           const std::map<std::string, std::string>& extra_header) {
  std::ostringstream buf;
  write_embedding_table(table, buf, extra_header);
  write_file_atomic(path, buf.str());
}

EmbeddingTable read_embedding_table(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw FormatError(1, "missing header");
  ++lineno;
  nlohmann::json header = parse_json_line(line, lineno);
  if (!header.is_object() || header.value("format", "") != "negsuite-emb") {
    throw FormatError(lineno, "not a negsuite-emb header");
  }
  if (header.value("version", 0) != 1) throw FormatError(lineno, "unsupported version");
  if (!header.contains("dim") || !header["dim"].is_number_unsigned() || header["dim"] == 0) {
    throw FormatError(lineno, "header dim must be a positive integer");
  }
  if (!header.contains("count") || !header["count"].is_number_unsigned()) {
    throw FormatError(lineno, "header count must be a non-negative integer");
  }
  const auto dim = header["dim"].get<std::size_t>();
  const auto count = header["count"].get<std::size_t>();
  EmbeddingTable table(dim);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      // Only a trailing empty line is tolerated.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw FormatError(lineno, "empty line");
    }
    nlohmann::json row = parse_json_line(line, lineno);
    if (!row.is_object() || !row.contains("id") || !row["id"].is_string() ||
        !row.contains("vec") || !row["vec"].is_array()) {
      throw FormatError(lineno, "expected {\"id\":string,\"vec\":[numbers]}");
    }
    std::vector<double> vec;
    vec.reserve(row["vec"].size());
    for (const auto& x : row["vec"]) {
      if (!x.is_number()) throw FormatError(lineno, "non-numeric vector component");
      vec.push_back(x.get<double>());
      if (!std::isfinite(vec.back())) throw FormatError(lineno, "non-finite vector component");
    }
    auto id = row["id"].get<std::string>();
    if (vec.size() != dim) {
      throw DimMismatch("line " + std::to_string(lineno) + ": entry " + id + " has length " +
                        std::to_string(vec.size()) + ", header dim is " + std::to_string(dim));
    }
    if (table.contains(id)) throw FormatError(lineno, "duplicate id " + id);
    table.insert(std::move(id), std::move(vec));
  }
  if (table.size() != count) {
    throw FormatError(lineno, "header count " + std::to_string(count) + " but " +
                                  std::to_string(table.size()) + " rows");
  }
  return table;
}

EmbeddingTable read_embedding_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return read_embedding_table(in);
}

}  // namespace negsuite
