#include "negsuite/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <sstream>

#include "negsuite/errors.hpp"
#include "negsuite/text.hpp"

namespace negsuite {

namespace {

constexpr BatteryFamily kFamilies[] = {BatteryFamily::affirm_single, BatteryFamily::neg_single,
                                       BatteryFamily::affirm_two, BatteryFamily::hybrid,
                                       BatteryFamily::double_neg};

const std::vector<std::string>& family_patterns(const TemplateBatteryPatterns& p, BatteryFamily f) {
  switch (f) {
    case BatteryFamily::affirm_single: return p.affirm_single;
    case BatteryFamily::neg_single: return p.neg_single;
    case BatteryFamily::affirm_two: return p.affirm_two;
    case BatteryFamily::hybrid: return p.hybrid;
    case BatteryFamily::double_neg: return p.double_neg;
  }
  return p.affirm_single;
}

bool single_object(BatteryFamily f) {
  return f == BatteryFamily::affirm_single || f == BatteryFamily::neg_single;
}

std::string id_part(const Concept& c) {
  std::string s = c.name();
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

double cosine_of(const std::vector<double>& a, const std::vector<double>& b) { return cosine(a, b); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(BatteryFamily f) {
  switch (f) {
    case BatteryFamily::affirm_single: return "affirm_single";
    case BatteryFamily::neg_single: return "neg_single";
    case BatteryFamily::affirm_two: return "affirm_two";
    case BatteryFamily::hybrid: return "hybrid";
    case BatteryFamily::double_neg: return "double_neg";
  }
  return "affirm_single";
}

BatteryFamily parse_battery_family(std::string_view s) {
  for (auto f : kFamilies) {
    if (to_string(f) == s) return f;
  }
  throw InputError("unknown battery family: " + std::string(s));
}

std::vector<BatteryCaption> build_template_battery(std::span<const Concept> objects,
                                                   std::span<const ConceptPair> pairs,
                                                   const TemplateBatteryPatterns& patterns) {
  std::vector<BatteryCaption> out;
  for (auto f : kFamilies) {
    const auto& pats = family_patterns(patterns, f);
    for (std::size_t t = 0; t < pats.size(); ++t) {
      std::ostringstream prefix;
      prefix << to_string(f) << '.' << std::setw(2) << std::setfill('0') << t << '.';
      if (single_object(f)) {
        for (const auto& a : objects) {
          out.push_back({prefix.str() + id_part(a), f, t, {a}, render(pats[t], {{"A", a.name()}})});
        }
      } else {
        for (const auto& [a, b] : pairs) {
          out.push_back({prefix.str() + id_part(a) + "." + id_part(b), f, t, {a, b},
                         render(pats[t], {{"A", a.name()}, {"B", b.name()}})});
        }
      }
    }
  }
  return out;
}

std::vector<BatteryCaption> build_template_battery(std::span<const Concept> objects,
                                                   std::span<const ConceptPair> pairs) {
  return build_template_battery(objects, pairs, default_catalog().battery);
}

std::vector<std::pair<std::size_t, std::size_t>> matched_template_pairs(
    const TemplateBatteryPatterns& patterns, std::span<const std::string> negation_cues) {
  auto strip = [&](const std::string& p) {
    auto toks = tokenize(p);
    std::erase_if(toks, [&](const std::string& t) {
      return std::find(negation_cues.begin(), negation_cues.end(), t) != negation_cues.end();
    });
    return toks;
  };
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t j = 0; j < patterns.neg_single.size(); ++j) {
    const auto neg = strip(patterns.neg_single[j]);
    for (std::size_t i = 0; i < patterns.affirm_single.size(); ++i) {
      if (tokenize(patterns.affirm_single[i]) == neg) {
        out.emplace_back(i, j);
        break;
      }
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const BatteryCaption& c) {
  nlohmann::ordered_json objs = nlohmann::ordered_json::array();
  for (const auto& o : c.objects) objs.push_back(o.name());
  return {{"id", c.id},
          {"family", to_string(c.family)},
          {"template", c.template_index},
          {"objects", objs},
          {"text", c.text}};
}

BatteryCaption battery_caption_from_json(const nlohmann::json& j, std::size_t lineno) {
  try {
    BatteryCaption c;
    c.id = j.at("id").get<std::string>();
    c.family = parse_battery_family(j.at("family").get<std::string>());
    c.template_index = j.at("template").get<std::size_t>();
    for (const auto& o : j.at("objects")) c.objects.emplace_back(o.get<std::string>());
    c.text = j.at("text").get<std::string>();
    const std::size_t expected = single_object(c.family) ? 1 : 2;
    if (c.objects.size() != expected) throw FormatError(lineno, "wrong object count for family");
    return c;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(lineno, std::string("bad battery caption: ") + e.what());
  }
}

PcaResult pca_project(const Eigen::MatrixXd& points, std::size_t n_components) {
  const auto count = static_cast<std::size_t>(points.rows());
  const auto dim = static_cast<std::size_t>(points.cols());
  if (count < 2) throw ContractError("PCA needs at least two points");
  if (n_components == 0 || n_components > std::min(count - 1, dim)) {
    throw ContractError("PCA components must lie in [1, min(count - 1, dim)]");
  }
  PcaResult r;
  r.mean = points.colwise().mean().transpose();
  const Eigen::MatrixXd centered = points.rowwise() - r.mean.transpose();
  if (centered.cwiseAbs().maxCoeff() == 0.0) throw DegenerateData("all PCA input points coincide");
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(count - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DegenerateData("covariance eigendecomposition failed");

  struct Axis {
    double value;
    Eigen::VectorXd vec;
    Eigen::Index peak;
  };
  std::vector<Axis> axes;
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(k);
    Eigen::Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v(peak) < 0) v = -v;
    axes.push_back({std::max(0.0, solver.eigenvalues()(k)), v, peak});
  }
  const double total = cov.trace();
  const double tol = 1e-12 * std::max(1.0, total);
  std::stable_sort(axes.begin(), axes.end(), [&](const Axis& a, const Axis& b) {
    if (std::abs(a.value - b.value) > tol) return a.value > b.value;
    return a.peak < b.peak;
  });

  const auto n = static_cast<Eigen::Index>(n_components);
  r.components.resize(n, static_cast<Eigen::Index>(dim));
  r.eigenvalues.resize(n);
  r.explained_variance_ratio.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    r.components.row(k) = axes[static_cast<std::size_t>(k)].vec.transpose();
    r.eigenvalues(k) = axes[static_cast<std::size_t>(k)].value;
    r.explained_variance_ratio(k) = total > 0 ? r.eigenvalues(k) / total : 0.0;
  }
  r.coordinates = centered * r.components.transpose();
  return r;
}

double negation_separation_score(
    std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs) {
  if (pairs.empty()) throw ContractError("separation score needs at least one pair");
  double sum = 0.0;
  for (const auto& [a, n] : pairs) sum += cosine_of(a, n);
  return sum / static_cast<double>(pairs.size());
}

double negation_object_collapse_score(
    const std::map<std::string, std::vector<std::vector<double>>>& neg_by_object) {
  if (neg_by_object.size() < 2) throw ContractError("collapse score needs at least two objects");
  double sum = 0.0;
  std::size_t count = 0;
  for (auto a = neg_by_object.begin(); a != neg_by_object.end(); ++a) {
    for (auto b = std::next(a); b != neg_by_object.end(); ++b) {
      for (const auto& u : a->second) {
        for (const auto& v : b->second) {
          sum += cosine_of(u, v);
          ++count;
        }
      }
    }
  }
  if (count == 0) throw ContractError("collapse score needs embeddings for every object");
  return sum / static_cast<double>(count);
}

AffirmationBiasReport affirmation_bias_report(std::span<const MCQPrediction> predictions,
                                              std::span<const MCQItem> items) {
  const auto r = breakdown_by_template(predictions, items);
  return {r.false_negation_selection_rate, r.per_template, r.selection_frequency, r.errors};
}

nlohmann::ordered_json to_json(const AffirmationBiasReport& r) {
  nlohmann::ordered_json j;
  j["falseNegationSelectionRate"] = r.false_negation_selection_rate;
  j["errors"] = r.errors;
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [t, s] : r.per_template) {
    per[std::string(to_string(t))] = {{"count", s.count}, {"correct", s.correct}, {"accuracy", s.accuracy}};
  }
  j["perTemplateAccuracy"] = per;
  nlohmann::ordered_json sel = nlohmann::ordered_json::object();
  for (const auto& [t, v] : r.selection_frequency) sel[std::string(to_string(t))] = v;
  j["selectionFrequency"] = sel;
  return j;
}

std::string scatter_csv(std::span<const ScatterPoint> points) {
  std::ostringstream out;
  out.precision(10);
  out << "x,y,family,object\n";
  for (const auto& p : points) {
    out << p.x << ',' << p.y << ',' << csv_field(p.family) << ',' << csv_field(p.object) << '\n';
  }
  return out.str();
}

std::vector<ScatterPoint> read_scatter_csv(std::istream& in) {
  std::vector<ScatterPoint> out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.starts_with('#')) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw FormatError(lineno, "expected x,y,family,object");
    try {
      out.push_back({std::stod(f[0]), std::stod(f[1]), f[2], f[3]});
    } catch (const std::exception&) {
      throw FormatError(lineno, "coordinates are not numbers");
    }
  }
  return out;
}

std::string scatter_svg(std::span<const ScatterPoint> points, const std::string& title) {
  constexpr double W = 640, H = 480, M = 48;
  static const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                        "#8c564b", "#e377c2", "#7f7f7f"};
  std::vector<std::string> families;
  for (const auto& p : points) {
    if (std::find(families.begin(), families.end(), p.family) == families.end()) families.push_back(p.family);
  }
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!points.empty()) {
    x0 = x1 = points[0].x;
    y0 = y1 = points[0].y;
    for (const auto& p : points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  }
  if (x1 - x0 < 1e-12) { x0 -= 1; x1 += 1; }
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  auto sx = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M - 140); };
  auto sy = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };

  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << xml_escape(title) << "</text>\n";
  }
  out << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M - 140 << "\" height=\""
      << H - 2 * M << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (const auto& p : points) {
    const auto f = static_cast<std::size_t>(
        std::find(families.begin(), families.end(), p.family) - families.begin());
    out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"3\" fill=\""
        << palette[f % std::size(palette)] << "\" fill-opacity=\"0.7\"><title>"
        << xml_escape(p.family + " " + p.object) << "</title></circle>\n";
  }
  for (std::size_t f = 0; f < families.size(); ++f) {
    const double y = M + 16 + 18 * static_cast<double>(f);
    out << "<circle cx=\"" << W - M - 120 << "\" cy=\"" << y - 4 << "\" r=\"4\" fill=\""
        << palette[f % std::size(palette)] << "\"/>\n";
    out << "<text x=\"" << W - M - 110 << "\" y=\"" << y << "\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << xml_escape(families[f]) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

BatteryDiagnostics analyze_battery(std::span<const BatteryCaption> battery,
                                   const EmbeddingTable& embeddings) {
  BatteryDiagnostics d;
  if (battery.empty()) return d;
  const auto& cat = default_catalog();
  const auto matched = matched_template_pairs(cat.battery, cat.negation_cues);

  std::map<std::pair<std::size_t, std::string>, const BatteryCaption*> affirm, negated;
  std::map<std::string, std::vector<std::vector<double>>> neg_by_object;
  for (const auto& c : battery) {
    if (c.family == BatteryFamily::affirm_single) affirm[{c.template_index, c.objects[0].name()}] = &c;
    if (c.family == BatteryFamily::neg_single) {
      negated[{c.template_index, c.objects[0].name()}] = &c;
      neg_by_object[c.objects[0].name()].push_back(embeddings.at(c.id));
    }
  }
  std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
  for (const auto& [key, neg] : negated) {
    for (const auto& [i, j] : matched) {
      if (j != key.first) continue;
      auto a = affirm.find({i, key.second});
      if (a != affirm.end()) pairs.emplace_back(embeddings.at(a->second->id), embeddings.at(neg->id));
    }
  }
  if (!pairs.empty()) d.separation_score = negation_separation_score(pairs);
  if (neg_by_object.size() >= 2) d.collapse_score = negation_object_collapse_score(neg_by_object);

  Eigen::MatrixXd points(static_cast<Eigen::Index>(battery.size()),
                         static_cast<Eigen::Index>(embeddings.dim()));
  for (std::size_t i = 0; i < battery.size(); ++i) {
    const auto& v = embeddings.at(battery[i].id);
    for (std::size_t k = 0; k < v.size(); ++k) {
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[k];
    }
  }
  const auto n = std::min<std::size_t>(2, std::min(battery.size() - 1, embeddings.dim()));
  if (n == 0) return d;
  try {
    d.pca = pca_project(points, n);
  } catch (const DegenerateData&) {
    return d;
  }
  for (std::size_t i = 0; i < battery.size(); ++i) {
    std::string obj;
    for (const auto& o : battery[i].objects) obj += (obj.empty() ? "" : "+") + o.name();
    const auto row = static_cast<Eigen::Index>(i);
    d.scatter.push_back({d.pca.coordinates(row, 0), n > 1 ? d.pca.coordinates(row, 1) : 0.0,
                         std::string(to_string(battery[i].family)), obj});
  }
  return d;
}

nlohmann::ordered_json to_json(const BatteryDiagnostics& d) {
  nlohmann::ordered_json j;
  j["negationSeparationScore"] = d.separation_score ? nlohmann::ordered_json(*d.separation_score) : nullptr;
  j["negationObjectCollapseScore"] = d.collapse_score ? nlohmann::ordered_json(*d.collapse_score) : nullptr;
  nlohmann::ordered_json ratios = nlohmann::ordered_json::array();
  for (Eigen::Index k = 0; k < d.pca.explained_variance_ratio.size(); ++k) {
    ratios.push_back(d.pca.explained_variance_ratio(k));
  }
  j["pcaExplainedVarianceRatio"] = ratios;
  j["points"] = d.scatter.size();
  return j;
}

}  // namespace negsuite
