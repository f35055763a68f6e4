// negsuite command-line driver.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "negsuite/catalog.hpp"
#include "negsuite/cooccur.hpp"
#include "negsuite/core.hpp"
#include "negsuite/diagnostics.hpp"
#include "negsuite/errors.hpp"
#include "negsuite/eval.hpp"
#include "negsuite/hooks.hpp"
#include "negsuite/io.hpp"
#include "negsuite/synthesis.hpp"
#include "negsuite/toyworld.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace negsuite;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitContract = 3;
constexpr int kExitInternal = 1;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::uint64_t parse_seed_text(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InputError(std::string(what) + " is not an unsigned integer: " + text);
  }
}

// --seed, then NEGSUITE_SEED, then `fallback`.
std::uint64_t resolve_seed(const Common& c, std::uint64_t fallback) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("NEGSUITE_SEED"); env && *env) {
    return parse_seed_text(env, "NEGSUITE_SEED");
  }
  return fallback;
}

bool seed_given(const Common& c) {
  const char* env = std::getenv("NEGSUITE_SEED");
  return c.seed.has_value() || (env && *env);
}

std::string csv_provenance(std::uint64_t seed) {
  return "# " + std::string(kToolVersion) + " seed=" + std::to_string(seed) + "\n";
}

void write_config_copy(const fs::path& out, ordered_json cfg) {
  cfg["tool"] = kToolVersion;
  write_file_atomic(fs::path(out.string() + ".config.json"), cfg.dump(2) + "\n");
}

fs::path sibling(const fs::path& out, const std::string& ext) {
  auto p = out;
  p.replace_extension(ext);
  return p;
}

// Negatives for synthesis: the scene's own list when present, else
// co-occurrence proposals over the whole input. With `fill`, a listed set
// shorter than k is topped up with proposals.
std::vector<Concept> scene_negatives(const SceneRecord& s, const CooccurrenceMatrix& m, std::size_t k,
                                     Verifier* verifier, bool strict, bool fill = false) {
  std::vector<Concept> out(s.negative_candidates.begin(), s.negative_candidates.end());
  if (!out.empty() && (!fill || out.size() >= k)) return out;
  for (auto& c : propose_negatives(s, m, k + out.size(), verifier, strict)) {
    if (out.size() >= k) break;
    if (!s.negative_candidates.contains(c)) out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------- commands

struct CooccurArgs {
  std::string scenes;
};

int run_build_cooccur(const Common& c, const CooccurArgs& a) {
  const auto seed = resolve_seed(c, 0);
  const auto scenes = read_scenes(a.scenes);
  const auto matrix = build_cooccurrence(scenes);
  std::ostringstream out;
  write_cooccurrence(matrix, out, seed);
  write_file_atomic(c.out, out.str());
  write_config_copy(c.out, {{"command", "build-cooccur"}, {"scenes", a.scenes}, {"seed", seed},
                            {"out", c.out}});
  std::cerr << "co-occurrence over " << matrix.size() << " concepts -> " << c.out << "\n";
  return 0;
}

struct SynthArgs {
  std::string scenes;
  bool mcq = false;
  bool captions = false;
  bool negcap = false;
  bool binary = false;
  std::size_t k = 3;
  std::string paraphraser = "identity";
  std::string verifier = "none";
  bool strict = false;
};

int run_synthesize(const Common& c, const SynthArgs& a) {
  const int modes = int(a.mcq) + int(a.captions) + int(a.negcap) + int(a.binary);
  if (modes != 1) throw InputError("choose exactly one of --mcq, --captions, --negcap, --binary");
  if (a.k == 0) throw InputError("--k must be positive");
  const auto seed = resolve_seed(c, 0);
  const auto scenes = read_scenes(a.scenes);
  if (scenes.empty()) throw EmptyDataset();
  const auto matrix = build_cooccurrence(scenes);
  auto paraphraser = make_paraphraser(a.paraphraser);
  auto verifier = make_verifier(a.verifier);

  std::string format = a.mcq      ? "negsuite-mcq"
                       : a.binary ? "negsuite-mcq"
                                  : "negsuite-captions";
  std::ostringstream out;
  out << provenance_header(format, seed).dump() << '\n';
  std::size_t records = 0;
  for (const auto& s : scenes) {
    if (a.binary) {
      // Every listed condition yields a negation item labelled by presence;
      // present conditions also get an affirmation control against the
      // first absent one.
      const Concept* distractor =
          s.negative_candidates.empty() ? nullptr : &*s.negative_candidates.begin();
      auto emit = [&](MCQItem item, bool present) {
        item = label_binary_task(std::move(item), present);
        item.id = s.id + ":" + item.id;
        item.scene_id = s.id;
        out << to_json(item).dump() << '\n';
        ++records;
      };
      for (const auto& p : s.positives) {
        if (distractor) emit(make_binary_task(p, BinaryMode::affirmation_control, distractor), true);
        emit(make_binary_task(p, BinaryMode::negation), true);
      }
      for (const auto& n : s.negative_candidates) emit(make_binary_task(n, BinaryMode::negation), false);
      continue;
    }
    const auto negs = scene_negatives(s, matrix, a.k, verifier.get(), a.strict, a.negcap);
    auto rng = scene_rng(seed, s.id);
    if (a.mcq) {
      out << to_json(make_mcq(s, negs, rng, paraphraser.get())).dump() << '\n';
      ++records;
    } else if (a.captions) {
      if (negs.empty()) throw InsufficientConcepts("scene " + s.id + " has no negative concepts");
      for (const auto& rec : make_retrieval_captions(s, negs, rng, paraphraser.get())) {
        out << to_json(rec).dump() << '\n';
        ++records;
      }
    } else {
      for (const auto& rec : make_negcap_records(s, negs, paraphraser.get())) {
        out << to_json(rec).dump() << '\n';
        ++records;
      }
    }
  }
  write_file_atomic(c.out, out.str());
  write_config_copy(c.out, {{"command", "synthesize"},
                            {"scenes", a.scenes},
                            {"kind", a.mcq ? "mcq" : a.captions ? "captions" : a.negcap ? "negcap" : "binary"},
                            {"k", a.k},
                            {"paraphraser", a.paraphraser},
                            {"verifier", a.verifier},
                            {"strict", a.strict},
                            {"seed", seed},
                            {"out", c.out}});
  std::cerr << records << " records -> " << c.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string images;
  std::string texts;
  std::string items;
  std::string captions;
  std::string truth;
  std::vector<std::size_t> k{1, 5, 10};
  std::size_t frames = 0;
  std::string templates = "on";
};

RetrievalGroundTruth read_truth(const fs::path& path) {
  RetrievalGroundTruth truth;
  for (const auto& [lineno, j] : read_jsonl(path)) {
    try {
      auto& rel = truth[j.at("query").get<std::string>()];
      for (const auto& r : j.at("relevant")) rel.insert(r.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(lineno, std::string("bad truth row: ") + e.what());
    }
  }
  return truth;
}

// Groups "<video>@<frame>" ids, samples `k` frames per video in id order,
// and pools them. Other ids pass through.
EmbeddingTable pool_frames(const EmbeddingTable& table, std::size_t k) {
  std::map<std::string, std::vector<std::vector<double>>> videos;
  EmbeddingTable out(table.dim());
  for (const auto& [id, v] : table) {
    const auto at = id.rfind('@');
    if (at == std::string::npos) {
      out.insert(id, v);
    } else {
      videos[id.substr(0, at)].push_back(v);
    }
  }
  for (auto& [video, frames] : videos) {
    std::vector<std::vector<double>> picked;
    for (auto i : sample_frame_indices(frames.size(), std::min(k, frames.size()))) {
      picked.push_back(frames[i]);
    }
    out.insert(video, pool_video_frames(picked));
  }
  return out;
}

int run_evaluate(const Common& c, const EvalArgs& a) {
  const auto seed = resolve_seed(c, 0);
  if (a.templates != "on" && a.templates != "off") throw InputError("--templates must be on or off");
  if (a.items.empty() && a.captions.empty() && a.truth.empty()) {
    throw InputError("evaluate needs --items, --captions or --truth");
  }
  if (!a.captions.empty() && !a.truth.empty()) throw InputError("--captions and --truth are exclusive");
  auto images = read_embedding_table(fs::path(a.images));
  if (a.frames > 0) images = pool_frames(images, a.frames);
  images = normalize_embeddings(images);
  const auto texts = normalize_embeddings(read_embedding_table(fs::path(a.texts)));

  EvalReport report;
  if (!a.captions.empty() || !a.truth.empty()) {
    RetrievalGroundTruth truth;
    if (!a.captions.empty()) {
      const auto caps = read_captions(a.captions);
      truth = retrieval_truth_from_captions(caps);
    } else {
      truth = read_truth(a.truth);
    }
    // Query rows: only ids named by the truth.
    EmbeddingTable queries(texts.dim());
    for (const auto& [q, rel] : truth) {
      if (!texts.contains(q)) throw MissingQuery("no text embedding for query " + q);
      queries.insert(q, texts.at(q));
    }
    const auto S = cosine_similarity_matrix(queries, images);
    for (auto k : a.k) report.recall_at_k[k] = recall_at_k(S, truth, k);
    report.retrieval_queries = truth.size();
  }
  if (!a.items.empty()) {
    const auto items = read_mcq_items(a.items);
    const auto predictions = answer_mcqs(images, texts, items);
    const auto r = breakdown_by_template(predictions, items);
    const auto recall = report.recall_at_k;
    const auto queries = report.retrieval_queries;
    report = r;
    report.recall_at_k = recall;
    report.retrieval_queries = queries;
    if (a.templates == "off") {
      report.per_template.clear();
      report.selection_frequency.clear();
      report.option_prevalence.clear();
    }
  }

  auto doc = provenance_header("negsuite-eval", seed);
  const auto body = to_json(report);
  for (const auto& [key, value] : body.items()) doc[key] = value;
  write_file_atomic(c.out, doc.dump(2) + "\n");
  const auto csv_path = sibling(c.out, ".csv");
  write_file_atomic(csv_path, csv_provenance(seed) + to_csv(report));
  write_config_copy(c.out, {{"command", "evaluate"},
                            {"images", a.images},
                            {"texts", a.texts},
                            {"items", a.items},
                            {"captions", a.captions},
                            {"truth", a.truth},
                            {"k", a.k},
                            {"frames", a.frames},
                            {"templates", a.templates},
                            {"seed", seed},
                            {"out", c.out}});
  std::cerr << "report -> " << c.out << " and " << csv_path.string() << "\n";
  return 0;
}

struct ToyArgs {
  std::string config;
  std::optional<double> alpha;
  std::string condition;
  std::string mode;
};

ToyConfig resolve_toy_config(const Common& c, const ToyArgs& a) {
  ToyConfig cfg = a.config.empty() ? ToyConfig{} : ToyConfig::load(a.config);
  if (seed_given(c)) cfg.seed = resolve_seed(c, cfg.seed);
  if (a.alpha) cfg.alpha = *a.alpha;
  if (!a.condition.empty()) cfg.condition = parse_condition(a.condition);
  if (!a.mode.empty()) cfg.mode = parse_text_mode(a.mode);
  cfg.validate();
  return cfg;
}

int run_train_toy(const Common& c, const ToyArgs& a) {
  const auto cfg = resolve_toy_config(c, a);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  const auto e = run_toy_experiment(cfg);
  const std::map<std::string, std::string> header{{"tool", std::string(kToolVersion)},
                                                  {"seed", std::to_string(cfg.seed)}};
  std::ostringstream img, txt;
  write_embedding_table(model_table(e.result.model.image_map, "img"), img, header);
  write_embedding_table(model_table(e.result.model.text_map, "txt"), txt, header);
  write_file_atomic(dir / "image_map.emb.jsonl", img.str());
  write_file_atomic(dir / "text_map.emb.jsonl", txt.str());
  write_file_atomic(dir / "training_log.csv", csv_provenance(cfg.seed) + training_log_csv(e.result.log));
  write_file_atomic(dir / "metrics.csv", csv_provenance(cfg.seed) + metrics_csv(e.metrics));
  auto metrics = provenance_header("negsuite-toy-metrics", cfg.seed);
  const auto body = to_json(e.metrics);
  for (const auto& [key, value] : body.items()) metrics[key] = value;
  write_file_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
  auto resolved = cfg.to_json();
  resolved["command"] = "train-toy";
  resolved["tool"] = kToolVersion;
  write_file_atomic(dir / "config.json", resolved.dump(2) + "\n");

  const auto& pt = e.metrics.mcq.per_template;
  auto acc = [&](TemplateType t) { return pt.contains(t) ? pt.at(t).accuracy : 0.0; };
  std::cerr << "condition " << to_string(cfg.condition) << ": recall@5 " << e.metrics.recall_at_5
            << ", mcq " << e.metrics.mcq.mcq_accuracy << " (affirmation " << acc(TemplateType::affirmation)
            << ", negation " << acc(TemplateType::negation) << ", hybrid " << acc(TemplateType::hybrid)
            << ") -> " << dir.string() << "\n";
  return 0;
}

struct SweepArgs {
  ToyArgs toy;
  std::vector<double> alphas{0.0, 0.5, 0.9, 0.99, 1.0};
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

int run_sweep_alpha(const Common& c, const SweepArgs& a) {
  const auto cfg = resolve_toy_config(c, a.toy);
  const auto rows = run_alpha_sweep(cfg, a.alphas, a.seeds);
  write_file_atomic(c.out, csv_provenance(cfg.seed) + alpha_sweep_csv(rows));
  auto resolved = cfg.to_json();
  resolved["command"] = "sweep-alpha";
  resolved["alphas"] = a.alphas;
  resolved["seeds"] = a.seeds;
  resolved["out"] = c.out;
  write_config_copy(c.out, resolved);
  std::cerr << rows.size() << " alpha rows -> " << c.out << "\n";
  return 0;
}

struct DiagArgs {
  std::string battery;
  std::string write_battery;
  std::string embeddings;
  std::string model;
  std::vector<std::string> objects;
  std::vector<std::string> pairs;
  std::string mode;
  std::string items;
  std::string images;
  std::string texts;
  std::string render;
  std::string title;
};

std::vector<BatteryCaption> read_battery(const fs::path& path) {
  std::vector<BatteryCaption> out;
  for (const auto& [lineno, j] : read_jsonl(path)) out.push_back(battery_caption_from_json(j, lineno));
  return out;
}

struct LoadedModel {
  TwoTowerModel model;
  ToyVocabulary vocab;
  TextMode mode = TextMode::scoped;
};

LoadedModel load_model(const fs::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw InputError("cannot open " + (dir / "config.json").string());
  nlohmann::json cfg;
  try {
    in >> cfg;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad model config: ") + e.what());
  }
  LoadedModel m;
  m.vocab = ToyVocabulary::make(cfg.value("V", std::size_t{40}));
  m.mode = parse_text_mode(cfg.value("mode", std::string("scoped")));
  m.model.image_map = matrix_from_table(read_embedding_table(dir / "image_map.emb.jsonl"));
  m.model.text_map = matrix_from_table(read_embedding_table(dir / "text_map.emb.jsonl"));
  if (m.model.image_map.cols() != static_cast<Eigen::Index>(m.vocab.V()) ||
      m.model.text_map.cols() != static_cast<Eigen::Index>(m.vocab.text_dim()) ||
      m.model.image_map.rows() != m.model.text_map.rows()) {
    throw InputError("model matrices do not match the configured vocabulary");
  }
  return m;
}

std::vector<BatteryCaption> battery_from_args(const DiagArgs& a, const LoadedModel* model) {
  if (!a.battery.empty()) return read_battery(a.battery);
  std::vector<Concept> objects;
  std::vector<ConceptPair> pairs;
  for (const auto& o : a.objects) objects.emplace_back(o);
  for (const auto& p : a.pairs) {
    const auto colon = p.find(':');
    if (colon == std::string::npos) throw InputError("--pairs entries look like A:B, got " + p);
    pairs.emplace_back(Concept(p.substr(0, colon)), Concept(p.substr(colon + 1)));
  }
  if (objects.empty() && pairs.empty() && model) {
    // Default probe set: one object per theme, each paired with its neighbour.
    const auto& v = model->vocab;
    for (std::size_t i = 0; i < v.V(); i += ToyVocabulary::kThemeSize) objects.push_back(v.objects[i]);
    for (std::size_t i = 0; i + 1 < objects.size(); i += 2) pairs.emplace_back(objects[i], objects[i + 1]);
  }
  return build_template_battery(objects, pairs);
}

int run_diagnose(const Common& c, const DiagArgs& a) {
  const auto seed = resolve_seed(c, 0);
  if (!a.render.empty()) {
    std::ifstream in(a.render);
    if (!in) throw InputError("cannot open " + a.render);
    const auto points = read_scatter_csv(in);
    write_file_atomic(c.out, "<!-- " + std::string(kToolVersion) + " seed=" + std::to_string(seed) +
                                 " -->\n" + scatter_svg(points, a.title));
    write_config_copy(c.out, {{"command", "diagnose"}, {"render", a.render}, {"seed", seed}, {"out", c.out}});
    return 0;
  }

  std::optional<LoadedModel> model;
  if (!a.model.empty()) model = load_model(a.model);
  const auto battery = battery_from_args(a, model ? &*model : nullptr);

  if (!a.write_battery.empty()) {
    std::ostringstream out;
    out << provenance_header("negsuite-battery", seed).dump() << '\n';
    for (const auto& b : battery) out << to_json(b).dump() << '\n';
    write_file_atomic(a.write_battery, out.str());
    std::cerr << battery.size() << " battery captions -> " << a.write_battery << "\n";
    if (a.embeddings.empty() && !model) {
      write_config_copy(a.write_battery, {{"command", "diagnose"}, {"objects", a.objects},
                                          {"pairs", a.pairs}, {"seed", seed}});
      return 0;
    }
  }

  if (c.out.empty()) throw InputError("diagnose needs --out");
  std::optional<EmbeddingTable> embeddings;
  if (!a.embeddings.empty()) {
    embeddings = normalize_embeddings(read_embedding_table(fs::path(a.embeddings)));
  } else if (model) {
    std::vector<std::pair<std::string, std::string>> caps;
    for (const auto& b : battery) caps.emplace_back(b.id, b.text);
    const auto mode = a.mode.empty() ? model->mode : parse_text_mode(a.mode);
    embeddings = embed_captions(model->model, model->vocab, mode, caps);
  }
  if (!embeddings && a.items.empty()) {
    throw InputError("diagnose needs --embeddings, --model, --items or --render");
  }

  auto doc = provenance_header("negsuite-diagnostics", seed);
  if (embeddings) {
    const auto d = analyze_battery(battery, *embeddings);
    doc["battery"] = to_json(d);
    const auto csv_path = sibling(c.out, ".scatter.csv");
    const auto svg_path = sibling(c.out, ".svg");
    write_file_atomic(csv_path, csv_provenance(seed) + scatter_csv(d.scatter));
    write_file_atomic(svg_path, "<!-- " + std::string(kToolVersion) + " seed=" + std::to_string(seed) +
                                    " -->\n" + scatter_svg(d.scatter, a.title));
  }
  if (!a.items.empty()) {
    if (a.images.empty() || a.texts.empty()) throw InputError("--items needs --images and --texts");
    const auto items = read_mcq_items(a.items);
    const auto images = normalize_embeddings(read_embedding_table(fs::path(a.images)));
    const auto texts = normalize_embeddings(read_embedding_table(fs::path(a.texts)));
    doc["affirmationBias"] = to_json(affirmation_bias_report(answer_mcqs(images, texts, items), items));
  }
  write_file_atomic(c.out, doc.dump(2) + "\n");
  write_config_copy(c.out, {{"command", "diagnose"},
                            {"battery", a.battery},
                            {"embeddings", a.embeddings},
                            {"model", a.model},
                            {"objects", a.objects},
                            {"pairs", a.pairs},
                            {"mode", a.mode},
                            {"items", a.items},
                            {"images", a.images},
                            {"texts", a.texts},
                            {"seed", seed},
                            {"out", c.out}});
  std::cerr << "diagnostics -> " << c.out << "\n";
  return 0;
}

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--seed", c.seed, "Random seed (falls back to NEGSUITE_SEED)");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

void add_toy_flags(CLI::App* cmd, ToyArgs& t) {
  cmd->add_option("config", t.config, "Experiment config (key = value lines)");
  cmd->add_option("--alpha", t.alpha, "Contrastive weight in [0, 1]");
  cmd->add_option("--condition", t.condition, "affirm-only | negcap | negfull");
  cmd->add_option("--mode", t.mode, "Text featurizer: scoped | bag");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"negsuite: negation-aware data synthesis, evaluation and diagnostics"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Common common;

  CooccurArgs cooc;
  auto* c_cooc = app.add_subcommand("build-cooccur", "Count concept co-occurrence over a scene file");
  c_cooc->add_option("scenes", cooc.scenes, "Scenes JSONL")->required();
  add_common(c_cooc, common);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synthesize", "Generate negated captions, MCQ items or binary tasks");
  c_synth->add_option("scenes", synth.scenes, "Scenes JSONL")->required();
  c_synth->add_flag("--mcq", synth.mcq, "Four-option MCQ items");
  c_synth->add_flag("--captions", synth.captions, "Negated retrieval captions");
  c_synth->add_flag("--negcap", synth.negcap, "Three hybrid training captions per scene");
  c_synth->add_flag("--binary", synth.binary, "Two-option affirmation-control and negation items");
  c_synth->add_option("--k", synth.k, "Negatives proposed per scene without listed negatives")
      ->capture_default_str();
  c_synth->add_option("--paraphraser", synth.paraphraser, "identity | command:<argv>")->capture_default_str();
  c_synth->add_option("--verifier", synth.verifier, "none | command:<argv>")->capture_default_str();
  c_synth->add_flag("--strict", synth.strict, "Drop negatives the verifier cannot decide");
  add_common(c_synth, common);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Score embeddings on retrieval and MCQ tasks");
  c_eval->add_option("--images", ev.images, "Image embedding table")->required();
  c_eval->add_option("--texts", ev.texts, "Text embedding table (captions and MCQ options)")->required();
  c_eval->add_option("--items", ev.items, "MCQ items JSONL");
  c_eval->add_option("--captions", ev.captions, "Caption records JSONL (truth = source scene)");
  c_eval->add_option("--truth", ev.truth, "Retrieval truth JSONL {\"query\",\"relevant\"}");
  c_eval->add_option("--k", ev.k, "Recall cut-offs")->delimiter(',')->capture_default_str();
  c_eval->add_option("--frames", ev.frames, "Pool <video>@<frame> image ids over this many frames");
  c_eval->add_option("--templates", ev.templates, "Per-template breakdown: on | off")->capture_default_str();
  add_common(c_eval, common);

  ToyArgs toy;
  auto* c_toy = app.add_subcommand("train-toy", "Train and evaluate the toy two-tower model");
  add_toy_flags(c_toy, toy);
  add_common(c_toy, common);

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep-alpha", "Median recall@5 and MCQ accuracy across alpha");
  add_toy_flags(c_sweep, sweep.toy);
  c_sweep->add_option("--alphas", sweep.alphas, "Alpha grid")->delimiter(',')->capture_default_str();
  c_sweep->add_option("--seeds", sweep.seeds, "Seeds")->delimiter(',')->capture_default_str();
  add_common(c_sweep, common);

  DiagArgs diag;
  auto* c_diag = app.add_subcommand("diagnose", "Template battery analyses, bias report, scatter plots");
  c_diag->add_option("--battery", diag.battery, "Battery captions JSONL");
  c_diag->add_option("--write-battery", diag.write_battery, "Write the battery captions here");
  c_diag->add_option("--embeddings", diag.embeddings, "Text embeddings of the battery, keyed by caption id");
  c_diag->add_option("--model", diag.model, "Directory written by train-toy");
  c_diag->add_option("--objects", diag.objects, "Objects for single-object families")->delimiter(',');
  c_diag->add_option("--pairs", diag.pairs, "A:B pairs for two-object families")->delimiter(',');
  c_diag->add_option("--mode", diag.mode, "Featurizer override for --model: scoped | bag");
  c_diag->add_option("--items", diag.items, "MCQ items for the affirmation-bias report");
  c_diag->add_option("--images", diag.images, "Image embeddings for --items");
  c_diag->add_option("--texts", diag.texts, "Option embeddings for --items");
  c_diag->add_option("--render", diag.render, "Only render this scatter CSV to SVG");
  c_diag->add_option("--title", diag.title, "SVG title");
  add_common(c_diag, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*c_cooc) return run_build_cooccur(common, cooc);
    if (*c_synth) return run_synthesize(common, synth);
    if (*c_eval) return run_evaluate(common, ev);
    if (*c_toy) return run_train_toy(common, toy);
    if (*c_sweep) return run_sweep_alpha(common, sweep);
    if (*c_diag) {
      if (common.out.empty() && diag.write_battery.empty()) throw InputError("diagnose needs --out");
      return run_diagnose(common, diag);
    }
  } catch (const InputError& e) {
    std::cerr << "negsuite: input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ContractError& e) {
    std::cerr << "negsuite: contract violation: " << e.what() << "\n";
    return kExitContract;
  } catch (const std::exception& e) {
    std::cerr << "negsuite: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
