#include "negsuite/cooccur.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include "negsuite/errors.hpp"
#include "negsuite/io.hpp"

namespace negsuite {

CooccurrenceMatrix::CooccurrenceMatrix(std::vector<Concept> vocabulary)
    : vocabulary_(std::move(vocabulary)), counts_(vocabulary_.size() * vocabulary_.size(), 0) {
  if (!std::is_sorted(vocabulary_.begin(), vocabulary_.end()) ||
      std::adjacent_find(vocabulary_.begin(), vocabulary_.end()) != vocabulary_.end()) {
    throw ContractError("co-occurrence vocabulary must be strictly ascending");
  }
}

std::optional<std::size_t> CooccurrenceMatrix::index_of(const Concept& c) const {
  auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), c);
  if (it == vocabulary_.end() || *it != c) return std::nullopt;
  return static_cast<std::size_t>(it - vocabulary_.begin());
}

std::int64_t CooccurrenceMatrix::count(const Concept& a, const Concept& b) const {
  auto i = index_of(a);
  auto j = index_of(b);
  return (i && j) ? count(*i, *j) : 0;
}

void CooccurrenceMatrix::add(std::size_t i, std::size_t j, std::int64_t n) {
  counts_[i * size() + j] += n;
  if (i != j) counts_[j * size() + i] += n;
}

CooccurrenceMatrix build_cooccurrence(std::span<const SceneRecord> scenes) {
  if (scenes.empty()) throw EmptyDataset();
  ConceptSet vocab;
  for (const auto& s : scenes) vocab.insert(s.positives.begin(), s.positives.end());
  CooccurrenceMatrix m(std::vector<Concept>(vocab.begin(), vocab.end()));
  std::vector<std::size_t> idx;
  for (const auto& s : scenes) {
    idx.clear();
    for (const auto& c : s.positives) idx.push_back(*m.index_of(c));
    for (std::size_t a = 0; a < idx.size(); ++a) {
      m.add(idx[a], idx[a]);
      for (std::size_t b = a + 1; b < idx.size(); ++b) m.add(idx[a], idx[b]);
    }
  }
  return m;
}

std::vector<Concept> propose_negatives(const SceneRecord& scene, const CooccurrenceMatrix& matrix,
                                       std::size_t k, Verifier* verifier, bool strict) {
  std::vector<std::size_t> pos_idx;
  for (const auto& p : scene.positives) {
    if (auto i = matrix.index_of(p)) pos_idx.push_back(*i);
  }
  struct Candidate {
    std::int64_t score;
    std::size_t index;
  };
  std::vector<Candidate> ranked;
  for (std::size_t c = 0; c < matrix.size(); ++c) {
    if (scene.positives.contains(matrix.vocabulary()[c])) continue;
    std::int64_t score = 0;
    for (auto p : pos_idx) score += matrix.count(c, p);
    ranked.push_back({score, c});
  }
  // Vocabulary is ascending, so index order is name order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  std::vector<Concept> out;
  for (const auto& cand : ranked) {
    if (out.size() >= k) break;
    const Concept& c = matrix.vocabulary()[cand.index];
    if (verifier) {
      Verdict v = verifier->verify(scene.media_ref, c);
      if (v == Verdict::present) continue;
      if (v == Verdict::unknown && strict) continue;
    }
    out.push_back(c);
  }
  return out;
}

void write_cooccurrence(const CooccurrenceMatrix& matrix, std::ostream& out, std::uint64_t seed) {
  out << provenance_header("negsuite-cooc", seed).dump() << '\n';
  const auto& vocab = matrix.vocabulary();
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    nlohmann::ordered_json row;
    row["a"] = vocab[i].name();
    row["n"] = matrix.diagonal(i);
    out << row.dump() << '\n';
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    for (std::size_t j = i + 1; j < vocab.size(); ++j) {
      if (matrix.count(i, j) == 0) continue;
      nlohmann::ordered_json row;
      row["a"] = vocab[i].name();
      row["b"] = vocab[j].name();
      row["n"] = matrix.count(i, j);
      out << row.dump() << '\n';
    }
  }
}

CooccurrenceMatrix read_cooccurrence(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw FormatError(1, "missing header");
  ++lineno;
  auto header = parse_json_line(line, lineno);
  if (!header.is_object() || header.value("format", "") != "negsuite-cooc" ||
      header.value("version", 0) != 1) {
    throw FormatError(lineno, "not a negsuite-cooc v1 header");
  }
  std::map<Concept, std::int64_t> diag;
  std::vector<std::tuple<Concept, Concept, std::int64_t, std::size_t>> pairs;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = parse_json_line(line, lineno);
    if (!row.is_object() || !row.contains("a") || !row["a"].is_string() || !row.contains("n") ||
        !row["n"].is_number_integer() || row["n"].get<std::int64_t>() < 0) {
      throw FormatError(lineno, "expected {\"a\":concept,[\"b\":concept,]\"n\":count}");
    }
    Concept a(row["a"].get<std::string>());
    auto n = row["n"].get<std::int64_t>();
    if (row.contains("b")) {
      if (!row["b"].is_string()) throw FormatError(lineno, "b must be a string");
      pairs.emplace_back(a, Concept(row["b"].get<std::string>()), n, lineno);
    } else if (!diag.emplace(a, n).second) {
      throw FormatError(lineno, "duplicate diagonal row for " + a.name());
    }
  }
  std::vector<Concept> vocab;
  for (const auto& [c, _] : diag) vocab.push_back(c);
  CooccurrenceMatrix m(vocab);
  for (std::size_t i = 0; i < vocab.size(); ++i) m.add(i, i, diag.at(vocab[i]));
  for (const auto& [a, b, n, ln] : pairs) {
    auto i = m.index_of(a);
    auto j = m.index_of(b);
    if (!i || !j || *i == *j) throw FormatError(ln, "pair row references unknown concept");
    if (m.count(*i, *j) != 0) throw FormatError(ln, "duplicate pair row");
    m.add(*i, *j, n);
  }
  return m;
}

}  // namespace negsuite
