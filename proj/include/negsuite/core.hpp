#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace negsuite {

// Lowercase, trim, and collapse internal whitespace runs to one space.
std::string canonicalize(std::string_view raw);

// A named object or concept. Always stored in canonical form; identity is
// exact string equality on that form.
class Concept {
 public:
  // Throws ContractError if the canonical form is empty.
  explicit Concept(std::string_view raw);

  const std::string& name() const { return name_; }

  friend auto operator<=>(const Concept&, const Concept&) = default;
  friend bool operator==(const Concept&, const Concept&) = default;

 private:
  std::string name_;
};

using ConceptSet = std::set<Concept>;

std::vector<Concept> to_concepts(const std::vector<std::string>& names);

// One media item: what is present ({pos}), what is verified absent ({neg}),
// and its affirmative captions.
struct SceneRecord {
  std::string id;
  ConceptSet positives;
  ConceptSet negative_candidates;
  std::vector<std::string> captions;
  std::optional<std::string> media_ref;

  // Throws ContractError when positives and negative candidates overlap or
  // the id is empty.
  void validate() const;
};

enum class Polarity { affirmative, negated, hybrid };

struct CaptionRecord {
  std::string id;
  std::string scene_id;
  std::string text;
  Polarity polarity = Polarity::affirmative;
  ConceptSet affirmed;
  ConceptSet negated;
};

enum class TemplateType { affirmation, negation, hybrid };
enum class OptionTruth { correct, false_affirmation, false_negation, false_hybrid };

struct MCQItem {
  std::string id;
  std::string scene_id;
  std::vector<std::string> options;
  std::vector<TemplateType> option_template;
  std::vector<OptionTruth> option_truth;
  std::size_t correct_index = 0;

  std::size_t size() const { return options.size(); }
  // Checks the structural invariants: C in {2, 4}, parallel tag vectors,
  // exactly one correct tag at correct_index, pairwise distinct texts.
  void validate() const;
};

std::string_view to_string(Polarity p);
std::string_view to_string(TemplateType t);
std::string_view to_string(OptionTruth t);
Polarity parse_polarity(std::string_view s);
TemplateType parse_template_type(std::string_view s);
OptionTruth parse_option_truth(std::string_view s);

// id -> vector mapping with a fixed dimension. Iteration is in ascending id
// order, which fixes row/column order of every derived matrix.
class EmbeddingTable {
 public:
  using Map = std::map<std::string, std::vector<double>>;

  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const std::string& id) const { return entries_.contains(id); }

  // Throws DimMismatch on a wrong length and ContractError on a duplicate id.
  void insert(std::string id, std::vector<double> vec);
  // Throws MissingEmbedding.
  const std::vector<double>& at(const std::string& id) const;

  std::vector<std::string> ids() const;
  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t dim_;
  Map entries_;
};

struct SimilarityMatrix {
  std::vector<std::string> query_ids;
  std::vector<std::string> candidate_ids;
  Eigen::MatrixXd scores;  // rows = queries, cols = candidates
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
// Cosine similarity; throws ZeroVector (id "<anonymous>") on a zero input.
double cosine(std::span<const double> a, std::span<const double> b);
// v / ||v||; throws ZeroVector(id) when ||v|| < 1e-12.
std::vector<double> unit(std::span<const double> v, const std::string& id = "<anonymous>");

EmbeddingTable normalize_embeddings(const EmbeddingTable& table);

// S[j][k] = dot(query_j, candidate_k), rows and columns in ascending id order.
// Every entry is a plain index-ordered dot product, so
// cosine_similarity_matrix(A, B) is exactly the transpose of (B, A).
SimilarityMatrix cosine_similarity_matrix(const EmbeddingTable& queries,
                                          const EmbeddingTable& candidates);

// negsuite-emb v1: a JSON header line followed by one {"id","vec"} object
// per line in ascending id order. `extra_header` fields are appended to the
// header object (provenance); readers ignore unknown header keys.
void write_embedding_table(const EmbeddingTable& table, std::ostream& out,
                           const std::map<std::string, std::string>& extra_header = {});
void write_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path,
                           const std::map<std::string, std::string>& extra_header = {});
EmbeddingTable read_embedding_table(std::istream& in);
EmbeddingTable read_embedding_table(const std::filesystem::path& path);

}  // namespace negsuite
