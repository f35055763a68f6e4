#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "negsuite/core.hpp"

namespace negsuite {

// Symmetric concept-pair counts over a scene dataset. counts(i, i) is the
// number of scenes containing concept i; counts(i, j) for i != j the number
// of scenes containing both.
class CooccurrenceMatrix {
 public:
  CooccurrenceMatrix() = default;
  explicit CooccurrenceMatrix(std::vector<Concept> vocabulary);

  const std::vector<Concept>& vocabulary() const { return vocabulary_; }
  std::size_t size() const { return vocabulary_.size(); }
  std::optional<std::size_t> index_of(const Concept& c) const;

  std::int64_t count(std::size_t i, std::size_t j) const { return counts_[i * size() + j]; }
  std::int64_t diagonal(std::size_t i) const { return count(i, i); }
  // Zero for concepts outside the vocabulary.
  std::int64_t count(const Concept& a, const Concept& b) const;

  // Adds `n` to both (i, j) and (j, i) (once when i == j).
  void add(std::size_t i, std::size_t j, std::int64_t n = 1);

  friend bool operator==(const CooccurrenceMatrix&, const CooccurrenceMatrix&) = default;

 private:
  std::vector<Concept> vocabulary_;
  std::vector<std::int64_t> counts_;
};

// Throws EmptyDataset when `scenes` is empty. Vocabulary is the ascending
// union of all positives.
CooccurrenceMatrix build_cooccurrence(std::span<const SceneRecord> scenes);

enum class Verdict { present, absent, unknown };

// Presence check for a concept in a media item, e.g. an object detector.
// Must be deterministic per (media, concept) within a run.
class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual Verdict verify(const std::optional<std::string>& media_ref, const Concept& target) = 0;
};

class FunctionVerifier final : public Verifier {
 public:
  using Fn = std::function<Verdict(const std::optional<std::string>&, const Concept&)>;
  explicit FunctionVerifier(Fn fn) : fn_(std::move(fn)) {}
  Verdict verify(const std::optional<std::string>& media_ref, const Concept& target) override {
    return fn_(media_ref, target);
  }

 private:
  Fn fn_;
};

// Up to k concepts absent from scene.positives, ranked by the summed
// co-occurrence with the scene's positives (descending, ties by ascending
// name). Zero-score concepts fill the list last, in name order. With a
// verifier, `present` verdicts are dropped always and `unknown` verdicts
// only when `strict` is set.
std::vector<Concept> propose_negatives(const SceneRecord& scene, const CooccurrenceMatrix& matrix,
                                       std::size_t k, Verifier* verifier = nullptr,
                                       bool strict = false);

// negsuite-cooc v1: header, then {"a","n"} diagonal rows in vocabulary order,
// then {"a","b","n"} rows for nonzero pairs with a < b.
void write_cooccurrence(const CooccurrenceMatrix& matrix, std::ostream& out,
                        std::uint64_t seed = 0);
CooccurrenceMatrix read_cooccurrence(std::istream& in);

}  // namespace negsuite
