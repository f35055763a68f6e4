#include "negsuite/toyworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "negsuite/catalog.hpp"
#include "negsuite/errors.hpp"
#include "negsuite/objectives.hpp"
#include "negsuite/synthesis.hpp"
#include "negsuite/text.hpp"

namespace negsuite {

namespace {

// Eight themes of five; larger vocabularies get generic names.
constexpr const char* kObjectNames[] = {
    "cup",      "plate",   "fork",     "kettle",    "toaster",   //
    "laptop",   "stapler", "monitor",  "keyboard",  "notebook",  //
    "shovel",   "rake",    "flower",   "hose",      "bench",     //
    "car",      "bicycle", "hydrant",  "lamppost",  "bus",       //
    "cat",      "dog",     "horse",    "sheep",     "cow",       //
    "umbrella", "towel",   "bucket",   "surfboard", "seagull",   //
    "guitar",   "piano",   "drum",     "violin",    "trumpet",   //
    "ball",     "racket",  "helmet",   "skateboard", "frisbee",
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  if constexpr (std::is_unsigned_v<T>) {
    if (!value.empty() && value.front() == '-') throw InputError("config " + key + ": negative value");
  }
  in >> out;
  if (in.fail() || !in.eof()) throw InputError("config " + key + ": cannot parse '" + value + "'");
  return out;
}

// Unit columns of W x, with the norms kept for backprop.
struct Embedded {
  Eigen::MatrixXd u;
  Eigen::VectorXd norms;
};

Embedded embed(const Eigen::MatrixXd& W, const Eigen::MatrixXd& x) {
  Embedded e;
  e.u = W * x;
  e.norms.resize(e.u.cols());
  for (Eigen::Index j = 0; j < e.u.cols(); ++j) {
    const double n = e.u.col(j).norm();
    if (n < 1e-12) throw ZeroVector("embedding column " + std::to_string(j));
    e.norms(j) = n;
    e.u.col(j) /= n;
  }
  return e;
}

// Chains dL/du back to dL/dv through v -> v / ||v||.
Eigen::MatrixXd normalize_backprop(const Embedded& e, const Eigen::MatrixXd& du) {
  Eigen::MatrixXd dv(du.rows(), du.cols());
  for (Eigen::Index j = 0; j < du.cols(); ++j) {
    const auto u = e.u.col(j);
    dv.col(j) = (du.col(j) - u * u.dot(du.col(j))) / e.norms(j);
  }
  return dv;
}

class TextFeatures {
 public:
  TextFeatures(const ToyVocabulary& vocab, TextMode mode) : vocab_(vocab), mode_(mode) {}

  const Eigen::VectorXd& get(const std::string& text) {
    auto it = cache_.find(text);
    if (it == cache_.end()) it = cache_.emplace(text, featurize_text(text, vocab_, mode_)).first;
    return it->second;
  }

  Eigen::MatrixXd matrix(const std::vector<std::string>& texts) {
    Eigen::MatrixXd out(vocab_.text_dim(), texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = get(texts[i]);
    return out;
  }

 private:
  const ToyVocabulary& vocab_;
  TextMode mode_;
  std::unordered_map<std::string, Eigen::VectorXd> cache_;
};

// Training material for one train scene.
struct SceneMaterial {
  Eigen::VectorXd image;
  std::vector<Eigen::VectorXd> captions;  // original, or the negcap records
  Eigen::MatrixXd mcq_options;            // text_dim x C
  std::size_t mcq_correct = 0;
};

std::vector<SceneMaterial> prepare(const ToyDataset& data, Condition condition, TextMode mode) {
  TextFeatures text(data.vocab, mode);
  std::vector<SceneMaterial> out;
  out.reserve(data.train.size());
  for (auto idx : data.train) {
    const auto& scene = data.scenes[idx];
    const auto& negs = data.negatives.at(scene.id);
    SceneMaterial m;
    m.image = featurize_image(scene, data.vocab, data.seed, data.sigma);
    if (condition == Condition::affirm_only) {
      for (const auto& c : scene.captions) m.captions.push_back(text.get(c));
    } else {
      for (const auto& rec : make_negcap_records(scene, negs)) m.captions.push_back(text.get(rec.text));
    }
    if (condition == Condition::negfull) {
      Rng rng(derive_seed(data.seed, "negmcq:" + scene.id));
      const auto item = make_negmcq_record(scene, negs, rng);
      m.mcq_options = text.matrix(item.options);
      m.mcq_correct = item.correct_index;
    }
    out.push_back(std::move(m));
  }
  return out;
}

struct Batch {
  Eigen::MatrixXd clip_images;
  Eigen::MatrixXd clip_texts;
  Eigen::MatrixXd mcq_images;
  Eigen::MatrixXd mcq_options;
  std::vector<std::size_t> mcq_correct;
};

void fill_clip(Batch& b, const std::vector<SceneMaterial>& mat, const std::vector<std::size_t>& ids,
               const std::vector<std::size_t>& caption_choice) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  b.clip_images.resize(mat.front().image.size(), n);
  b.clip_texts.resize(mat.front().captions.front().size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = mat[ids[static_cast<std::size_t>(i)]];
    b.clip_images.col(i) = m.image;
    b.clip_texts.col(i) = m.captions[caption_choice[static_cast<std::size_t>(i)]];
  }
}

void fill_mcq(Batch& b, const std::vector<SceneMaterial>& mat, const std::vector<std::size_t>& ids) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto c = mat.front().mcq_options.cols();
  b.mcq_images.resize(mat.front().image.size(), n);
  b.mcq_options.resize(mat.front().mcq_options.rows(), n * c);
  b.mcq_correct.clear();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = mat[ids[static_cast<std::size_t>(i)]];
    b.mcq_images.col(i) = m.image;
    b.mcq_options.middleCols(i * c, c) = m.mcq_options;
    b.mcq_correct.push_back(m.mcq_correct);
  }
}

// Draws n / 2 distinct pairs (partial Fisher-Yates over pair indices) and
// returns both scenes of each; train material holds present, absent
// consecutively.
std::vector<std::size_t> draw_batch(Rng& rng, std::vector<std::size_t>& pairs, std::size_t n) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < n / 2; ++i) {
    std::swap(pairs[i], pairs[i + rng.index(pairs.size() - i)]);
    ids.push_back(2 * pairs[i]);
    ids.push_back(2 * pairs[i] + 1);
  }
  return ids;
}

struct StepLoss {
  double value = 0.0;
  Eigen::MatrixXd image_grad;
  Eigen::MatrixXd text_grad;
};

StepLoss objective(const TwoTowerModel& model, const Batch& b, Condition condition,
                   const TrainHyper& h) {
  StepLoss out;
  auto clip = clip_batch_grad(model, b.clip_images, b.clip_texts, h.tau);
  if (condition != Condition::negfull) {
    out.value = clip.loss;
    out.image_grad = std::move(clip.image_map);
    out.text_grad = std::move(clip.text_map);
    return out;
  }
  auto mcq = mcq_batch_grad(model, b.mcq_images, b.mcq_options, b.mcq_correct, h.tau);
  const LossConfig cfg{h.alpha, h.tau};
  out.value = combined_loss({clip.loss, {}}, {mcq.loss, {}}, cfg).value;
  out.image_grad = h.alpha * clip.image_map + (1.0 - h.alpha) * mcq.image_map;
  out.text_grad = h.alpha * clip.text_map + (1.0 - h.alpha) * mcq.text_map;
  return out;
}

Eigen::MatrixXd columns(const std::vector<Eigen::VectorXd>& cols, std::size_t rows) {
  Eigen::MatrixXd out(rows, cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = cols[i];
  return out;
}

EmbeddingTable to_table(const std::vector<std::string>& ids, const Eigen::MatrixXd& u) {
  EmbeddingTable t(static_cast<std::size_t>(u.rows()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto col = u.col(static_cast<Eigen::Index>(i));
    t.insert(ids[i], std::vector<double>(col.data(), col.data() + col.size()));
  }
  return t;
}

}  // namespace

std::string_view to_string(TextMode m) { return m == TextMode::scoped ? "scoped" : "bag"; }

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::affirm_only: return "affirm-only";
    case Condition::negcap: return "negcap";
    case Condition::negfull: return "negfull";
  }
  return "negfull";
}

TextMode parse_text_mode(std::string_view s) {
  if (s == "scoped") return TextMode::scoped;
  if (s == "bag") return TextMode::bag;
  throw InputError("unknown text mode: " + std::string(s));
}

Condition parse_condition(std::string_view s) {
  if (s == "affirm-only") return Condition::affirm_only;
  if (s == "negcap") return Condition::negcap;
  if (s == "negfull") return Condition::negfull;
  throw InputError("unknown condition: " + std::string(s));
}

ToyConfig ToyConfig::parse(std::string_view text) {
  ToyConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(lineno, "expected key = value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "V") c.V = parse_number<std::size_t>(key, value);
    else if (key == "pairs") c.pairs = parse_number<std::size_t>(key, value);
    else if (key == "sigma") c.sigma = parse_number<double>(key, value);
    else if (key == "lr") c.lr = parse_number<double>(key, value);
    else if (key == "steps") c.steps = parse_number<std::size_t>(key, value);
    else if (key == "batch") c.batch = parse_number<std::size_t>(key, value);
    else if (key == "alpha") c.alpha = parse_number<double>(key, value);
    else if (key == "condition") c.condition = parse_condition(value);
    else if (key == "mode") c.mode = parse_text_mode(value);
    else if (key == "dim") c.dim = parse_number<std::size_t>(key, value);
    else if (key == "pretrain_steps") c.pretrain_steps = parse_number<std::size_t>(key, value);
    else if (key == "negatives") c.negatives = parse_number<std::size_t>(key, value);
    else if (key == "tau") c.tau = parse_number<double>(key, value);
    else if (key == "init_scale") c.init_scale = parse_number<double>(key, value);
    else if (key == "max_objects") c.max_objects = parse_number<std::size_t>(key, value);
    else throw FormatError(lineno, "unknown config key '" + key + "'");
  }
  return c;
}

ToyConfig ToyConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ToyConfig::validate() const {
  if (V < 4) throw ContractError("V must be at least 4");
  if (pairs == 0) throw ContractError("pairs must be positive");
  if (!(sigma >= 0.0)) throw ContractError("sigma must be non-negative");
  if (!(lr >= 0.0)) throw ContractError("lr must be non-negative");
  if (batch < 2) throw ContractError("batch must be at least 2");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in [0, 1]");
  if (dim == 0) throw ContractError("dim must be positive");
  if (negatives < 2) throw ContractError("negatives must be at least 2");
  if (!(tau > 0.0)) throw ContractError("tau must be positive");
  if (!(init_scale > 0.0)) throw ContractError("init_scale must be positive");
  if (max_objects < 2 || max_objects + negatives > V) {
    throw ContractError("max_objects must lie in [2, V - negatives]");
  }
}

nlohmann::ordered_json ToyConfig::to_json() const {
  return {{"seed", seed},
          {"V", V},
          {"pairs", pairs},
          {"sigma", sigma},
          {"lr", lr},
          {"steps", steps},
          {"batch", batch},
          {"alpha", alpha},
          {"condition", to_string(condition)},
          {"mode", to_string(mode)},
          {"dim", dim},
          {"pretrain_steps", pretrain_steps},
          {"negatives", negatives},
          {"tau", tau},
          {"init_scale", init_scale},
          {"max_objects", max_objects}};
}

ToyVocabulary ToyVocabulary::make(std::size_t V) {
  if (V < 4) throw ContractError("toy vocabulary needs at least 4 objects");
  ToyVocabulary v;
  constexpr std::size_t named = std::size(kObjectNames);
  for (std::size_t i = 0; i < V; ++i) {
    v.objects.emplace_back(i < named ? std::string(kObjectNames[i]) : "object" + std::to_string(i));
  }
  v.function_tokens = default_catalog().toy_function_tokens;
  return v;
}

std::size_t ToyVocabulary::object_index(const Concept& c) const {
  auto it = std::find(objects.begin(), objects.end(), c);
  if (it == objects.end()) throw UnknownToken(c.name());
  return static_cast<std::size_t>(it - objects.begin());
}

SceneRecord sample_scene(Rng& rng, const ToyVocabulary& vocab, std::size_t min_obj,
                         std::size_t max_obj, std::string id) {
  const auto V = vocab.V();
  if (min_obj < 1 || min_obj > max_obj || max_obj > V) {
    throw ContractError("sample_scene needs 1 <= min_obj <= max_obj <= V");
  }
  const std::size_t count = min_obj + rng.index(max_obj - min_obj + 1);
  const std::size_t themes = (V + ToyVocabulary::kThemeSize - 1) / ToyVocabulary::kThemeSize;
  const std::size_t theme = rng.index(themes);
  std::vector<bool> taken(V, false);
  SceneRecord scene;
  scene.id = std::move(id);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<std::size_t> in_theme;
    std::vector<std::size_t> any;
    for (std::size_t i = 0; i < V; ++i) {
      if (taken[i]) continue;
      any.push_back(i);
      if (vocab.theme_of(i) == theme) in_theme.push_back(i);
    }
    const bool themed = rng.coin(0.75);
    const auto& pool = themed && !in_theme.empty() ? in_theme : any;
    const auto pick = pool[rng.index(pool.size())];
    taken[pick] = true;
    scene.positives.insert(vocab.objects[pick]);
  }
  scene.captions = {toy_caption(scene)};
  return scene;
}

std::string toy_caption(const SceneRecord& scene) {
  std::string joined;
  for (const auto& c : scene.positives) {
    if (!joined.empty()) joined += " and ";
    joined += c.name();
  }
  return render(default_catalog().toy_caption, {{"objects", joined}});
}

HardNegativePair make_hardneg_pair(Rng& rng, const ToyVocabulary& vocab, std::string id,
                                   std::size_t max_obj) {
  auto present = sample_scene(rng, vocab, 2, max_obj, id + ".present");
  std::vector<Concept> pos(present.positives.begin(), present.positives.end());
  Concept target = pos[rng.index(pos.size())];
  SceneRecord absent;
  absent.id = id + ".absent";
  absent.positives = present.positives;
  absent.positives.erase(target);
  absent.captions = {toy_caption(absent)};
  return {std::move(id), std::move(present), std::move(absent), std::move(target)};
}

bool is_held_out(std::string_view pair_id) { return hash_string(pair_id) % 5 == 0; }

ToyDataset make_toy_dataset(const ToyConfig& cfg) {
  cfg.validate();
  ToyDataset d;
  d.vocab = ToyVocabulary::make(cfg.V);
  d.seed = cfg.seed;
  d.sigma = cfg.sigma;
  Rng rng(derive_seed(cfg.seed, "scenes"));
  for (std::size_t p = 0; p < cfg.pairs; ++p) {
    std::ostringstream id;
    id << "pair" << std::setw(5) << std::setfill('0') << p;
    d.pairs.push_back(make_hardneg_pair(rng, d.vocab, id.str(), cfg.max_objects));
  }
  for (std::size_t p = 0; p < d.pairs.size(); ++p) {
    const bool held = is_held_out(d.pairs[p].id);
    if (held) d.held_out_pairs.push_back(p);
    for (const auto* s : {&d.pairs[p].present, &d.pairs[p].absent}) {
      (held ? d.held_out : d.train).push_back(d.scenes.size());
      d.scenes.push_back(*s);
    }
  }
  if (d.train.size() < 2 || d.held_out.empty()) {
    throw DegenerateData("toy split leaves too few train or held-out scenes");
  }
  d.cooccurrence = build_cooccurrence(d.scenes);
  for (auto& s : d.scenes) {
    auto negs = propose_negatives(s, d.cooccurrence, cfg.negatives);
    s.negative_candidates = ConceptSet(negs.begin(), negs.end());
    d.negatives.emplace(s.id, std::move(negs));
  }
  return d;
}

Eigen::VectorXd featurize_image(const SceneRecord& scene, const ToyVocabulary& vocab,
                                std::uint64_t dataset_seed, double sigma) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.V()));
  for (const auto& c : scene.positives) x(static_cast<Eigen::Index>(vocab.object_index(c))) = 1.0;
  if (sigma > 0.0) {
    Rng rng(derive_seed(dataset_seed, scene.id));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += sigma * rng.normal();
  }
  return x;
}

Eigen::VectorXd featurize_text(std::string_view text, const ToyVocabulary& vocab, TextMode mode) {
  const auto& cues = default_catalog().negation_cues;
  const auto parse = parse_scoped(text, vocab.objects, cues);
  const auto V = static_cast<Eigen::Index>(vocab.V());
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.text_dim()));
  for (const auto& m : parse.mentions) {
    const auto i = static_cast<Eigen::Index>(vocab.object_index(m.item));
    f(mode == TextMode::scoped && m.negated ? V + i : i) += 1.0;
  }
  for (const auto& tok : parse.other_tokens) {
    auto it = std::find(vocab.function_tokens.begin(), vocab.function_tokens.end(), tok);
    if (it == vocab.function_tokens.end()) throw UnknownToken(tok);
    if (mode == TextMode::bag && std::find(cues.begin(), cues.end(), tok) != cues.end()) continue;
    f(2 * V + (it - vocab.function_tokens.begin())) += 1.0;
  }
  return f;
}

TwoTowerModel TwoTowerModel::random(std::size_t d, const ToyVocabulary& vocab, Rng& rng,
                                    double scale) {
  TwoTowerModel m;
  const auto rows = static_cast<Eigen::Index>(d);
  m.image_map.resize(rows, static_cast<Eigen::Index>(vocab.V()));
  m.text_map.resize(rows, static_cast<Eigen::Index>(vocab.text_dim()));
  for (Eigen::Index j = 0; j < m.image_map.cols(); ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m.image_map(i, j) = scale * rng.normal();
  for (Eigen::Index j = 0; j < m.text_map.cols(); ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m.text_map(i, j) = scale * rng.normal();
  return m;
}

Eigen::MatrixXd TwoTowerModel::embed_images(const Eigen::MatrixXd& x) const {
  return embed(image_map, x).u;
}

Eigen::MatrixXd TwoTowerModel::embed_texts(const Eigen::MatrixXd& x) const {
  return embed(text_map, x).u;
}

void TwoTowerModel::tie_negated_to_affirmed(std::size_t V) {
  const auto v = static_cast<Eigen::Index>(V);
  text_map.middleCols(v, v) = text_map.leftCols(v);
}

ModelGrad clip_batch_grad(const TwoTowerModel& m, const Eigen::MatrixXd& images,
                          const Eigen::MatrixXd& texts, double tau) {
  const auto ei = embed(m.image_map, images);
  const auto et = embed(m.text_map, texts);
  const Eigen::MatrixXd S = ei.u.transpose() * et.u;
  const auto r = clip_loss(S, LossConfig{1.0, tau});
  const Eigen::MatrixXd du_img = et.u * r.grad.transpose();
  const Eigen::MatrixXd du_txt = ei.u * r.grad;
  ModelGrad g;
  g.loss = r.value;
  g.image_map = normalize_backprop(ei, du_img) * images.transpose();
  g.text_map = normalize_backprop(et, du_txt) * texts.transpose();
  return g;
}

ModelGrad mcq_batch_grad(const TwoTowerModel& m, const Eigen::MatrixXd& images,
                         const Eigen::MatrixXd& options, std::span<const std::size_t> correct,
                         double tau) {
  const auto n = images.cols();
  if (n == 0 || options.cols() % n != 0) throw DimMismatch("options must hold C columns per image");
  const auto c = options.cols() / n;
  const auto ei = embed(m.image_map, images);
  const auto eo = embed(m.text_map, options);
  Eigen::MatrixXd logits(n, c);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < c; ++j) logits(i, j) = ei.u.col(i).dot(eo.u.col(i * c + j)) / tau;
  const auto r = mcq_loss(logits, correct);
  Eigen::MatrixXd du_img = Eigen::MatrixXd::Zero(ei.u.rows(), n);
  Eigen::MatrixXd du_opt(eo.u.rows(), options.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      du_img.col(i) += r.grad(i, j) / tau * eo.u.col(i * c + j);
      du_opt.col(i * c + j) = r.grad(i, j) / tau * ei.u.col(i);
    }
  }
  ModelGrad g;
  g.loss = r.value;
  g.image_map = normalize_backprop(ei, du_img) * images.transpose();
  g.text_map = normalize_backprop(eo, du_opt) * options.transpose();
  return g;
}

TrainResult train(const TwoTowerModel& init, const ToyDataset& data, Condition condition,
                  const TrainHyper& h) {
  LossConfig{h.alpha, h.tau}.validate();
  if (!(h.lr >= 0.0)) throw ContractError("learning rate must be non-negative");
  const auto material = prepare(data, condition, h.mode);
  const std::size_t n = std::min(h.batch, material.size()) / 2 * 2;
  if (n < 2) throw DegenerateData("training needs at least two train scenes");

  Batch probe;
  std::vector<std::size_t> probe_ids(n);
  std::iota(probe_ids.begin(), probe_ids.end(), 0);
  fill_clip(probe, material, probe_ids, std::vector<std::size_t>(n, 0));
  if (condition == Condition::negfull) fill_mcq(probe, material, probe_ids);

  TrainResult out{init, {}};
  auto& model = out.model;
  // Non-finite weights surface as NonFinite from the losses; report them as divergence.
  auto checked = [&](const Batch& b, std::size_t step) {
    try {
      return objective(model, b, condition, h);
    } catch (const NonFinite&) {
      throw DivergedLoss("loss is not finite at step " + std::to_string(step));
    }
  };
  auto log_loss = [&](std::size_t step) {
    const double v = checked(probe, step).value;
    if (!std::isfinite(v)) throw DivergedLoss("loss is not finite at step " + std::to_string(step));
    out.log.push_back({step, v});
  };
  log_loss(0);

  Rng rng(h.seed);
  std::vector<std::size_t> pool(material.size() / 2);
  std::iota(pool.begin(), pool.end(), 0);
  Batch batch;
  std::vector<std::size_t> choice(n);
  for (std::size_t step = 1; step <= h.steps; ++step) {
    const auto ids = draw_batch(rng, pool, n);
    for (std::size_t i = 0; i < n; ++i) choice[i] = rng.index(material[ids[i]].captions.size());
    fill_clip(batch, material, ids, choice);
    if (condition == Condition::negfull) fill_mcq(batch, material, draw_batch(rng, pool, n));
    const auto s = checked(batch, step);
    if (!std::isfinite(s.value) || !s.image_grad.allFinite() || !s.text_grad.allFinite()) {
      throw DivergedLoss("loss is not finite at step " + std::to_string(step));
    }
    model.image_map -= h.lr * s.image_grad;
    model.text_map -= h.lr * s.text_grad;
    if (h.log_every > 0 && (step % h.log_every == 0 || step == h.steps)) log_loss(step);
  }
  return out;
}

TwoTowerModel pretrain_base(const ToyDataset& data, const ToyConfig& cfg) {
  Rng init_rng(derive_seed(cfg.seed, "init"));
  auto model = TwoTowerModel::random(cfg.dim, data.vocab, init_rng, cfg.init_scale);
  if (cfg.pretrain_steps > 0) {
    TrainHyper h;
    h.lr = cfg.lr;
    h.steps = cfg.pretrain_steps;
    h.batch = cfg.batch;
    h.tau = cfg.tau;
    h.seed = derive_seed(cfg.seed, "pretrain");
    h.mode = cfg.mode;
    h.log_every = 0;
    model = train(model, data, Condition::affirm_only, h).model;
  }
  model.tie_negated_to_affirmed(data.vocab.V());
  return model;
}

ToyMetrics evaluate_held_out(const TwoTowerModel& model, const ToyDataset& data, TextMode mode) {
  TextFeatures text(data.vocab, mode);
  const auto& cat = default_catalog();

  std::vector<std::string> scene_ids;
  std::vector<Eigen::VectorXd> image_x;
  std::vector<std::string> orig_ids, orig_texts, neg_ids, neg_texts;
  std::vector<CaptionRecord> orig_records, neg_records;
  std::vector<MCQItem> items;
  std::vector<std::string> option_ids, option_texts;
  for (auto idx : data.held_out) {
    const auto& s = data.scenes[idx];
    const auto& negs = data.negatives.at(s.id);
    scene_ids.push_back(s.id);
    image_x.push_back(featurize_image(s, data.vocab, data.seed, data.sigma));

    CaptionRecord orig{s.id + "#orig", s.id, s.captions.front(), Polarity::affirmative, s.positives, {}};
    orig_ids.push_back(orig.id);
    orig_texts.push_back(orig.text);
    orig_records.push_back(std::move(orig));

    Rng neg_rng(derive_seed(data.seed, "eval-neg:" + s.id));
    for (auto& rec : make_retrieval_captions(s, negs, neg_rng)) {
      neg_ids.push_back(rec.id);
      neg_texts.push_back(rec.text);
      neg_records.push_back(std::move(rec));
    }

    Rng mcq_rng(derive_seed(data.seed, "eval-mcq:" + s.id));
    items.push_back(make_mcq(s, negs, mcq_rng));
    for (std::size_t j = 0; j < items.back().size(); ++j) {
      option_ids.push_back(option_embedding_id(items.back().id, j));
      option_texts.push_back(items.back().options[j]);
    }
  }

  const auto image_u = model.embed_images(columns(image_x, data.vocab.V()));
  const auto images = to_table(scene_ids, image_u);
  const auto orig = to_table(orig_ids, model.embed_texts(text.matrix(orig_texts)));
  const auto negated = to_table(neg_ids, model.embed_texts(text.matrix(neg_texts)));
  const auto options = to_table(option_ids, model.embed_texts(text.matrix(option_texts)));

  ToyMetrics m;
  m.recall_at_5 = recall_at_k(cosine_similarity_matrix(orig, images),
                              retrieval_truth_from_captions(orig_records), 5);
  m.recall_neg_at_5 = recall_at_k(cosine_similarity_matrix(negated, images),
                                  retrieval_truth_from_captions(neg_records), 5);
  const auto predictions = answer_mcqs(images, options, items);
  m.mcq = breakdown_by_template(predictions, items);
  m.mcq.recall_at_k[5] = m.recall_at_5;
  m.mcq.retrieval_queries = orig_records.size();

  std::size_t wins = 0;
  for (auto p : data.held_out_pairs) {
    const auto& pair = data.pairs[p];
    const auto t = model.embed_texts(
        text.get(render(cat.mcq_affirmation[0], {{"A", pair.target.name()}})));
    const auto& a = images.at(pair.present.id);
    const auto& b = images.at(pair.absent.id);
    const Eigen::Map<const Eigen::VectorXd> ua(a.data(), static_cast<Eigen::Index>(a.size()));
    const Eigen::Map<const Eigen::VectorXd> ub(b.data(), static_cast<Eigen::Index>(b.size()));
    if (ua.dot(t.col(0)) > ub.dot(t.col(0))) ++wins;
  }
  m.hardneg_discrimination =
      data.held_out_pairs.empty() ? 0.0
                                  : static_cast<double>(wins) / static_cast<double>(data.held_out_pairs.size());
  return m;
}

ToyExperiment run_toy_experiment(const ToyConfig& cfg) {
  const auto data = make_toy_dataset(cfg);
  const auto base = pretrain_base(data, cfg);
  TrainHyper h;
  h.lr = cfg.lr;
  h.steps = cfg.steps;
  h.batch = cfg.batch;
  h.alpha = cfg.alpha;
  h.tau = cfg.tau;
  h.seed = derive_seed(cfg.seed, "finetune");
  h.mode = cfg.mode;
  ToyExperiment e{cfg, train(base, data, cfg.condition, h), {}};
  e.metrics = evaluate_held_out(e.result.model, data, cfg.mode);
  return e;
}

std::vector<AlphaSweepRow> run_alpha_sweep(const ToyConfig& base, std::span<const double> alphas,
                                           std::span<const std::uint64_t> seeds) {
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ContractError("alpha outside [0, 1]");
  }
  if (seeds.empty()) throw ContractError("alpha sweep needs at least one seed");
  std::vector<AlphaSweepRow> rows;
  for (double a : alphas) rows.push_back({a, 0.0, 0.0, {}, {}});
  for (auto seed : seeds) {
    auto cfg = base;
    cfg.seed = seed;
    cfg.condition = Condition::negfull;
    const auto data = make_toy_dataset(cfg);
    const auto model = pretrain_base(data, cfg);
    for (auto& row : rows) {
      TrainHyper h;
      h.lr = cfg.lr;
      h.steps = cfg.steps;
      h.batch = cfg.batch;
      h.alpha = row.alpha;
      h.tau = cfg.tau;
      h.seed = derive_seed(seed, "finetune");
      h.mode = cfg.mode;
      const auto trained = train(model, data, Condition::negfull, h);
      const auto m = evaluate_held_out(trained.model, data, cfg.mode);
      row.recall_per_seed.push_back(m.recall_at_5);
      row.mcq_per_seed.push_back(m.mcq.mcq_accuracy);
    }
  }
  for (auto& row : rows) {
    row.recall_at_5 = median(row.recall_per_seed);
    row.mcq_accuracy = median(row.mcq_per_seed);
  }
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty list");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string alpha_sweep_csv(std::span<const AlphaSweepRow> rows) {
  std::ostringstream out;
  out.precision(10);
  out << "alpha,recall_at_5,mcq_accuracy,seeds\n";
  for (const auto& r : rows) {
    out << r.alpha << ',' << r.recall_at_5 << ',' << r.mcq_accuracy << ',' << r.recall_per_seed.size()
        << '\n';
  }
  return out.str();
}

std::string training_log_csv(std::span<const TrainLogEntry> log) {
  std::ostringstream out;
  out.precision(12);
  out << "step,loss\n";
  for (const auto& e : log) out << e.step << ',' << e.loss << '\n';
  return out.str();
}

nlohmann::ordered_json to_json(const ToyMetrics& m) {
  nlohmann::ordered_json j;
  j["recallAt5"] = m.recall_at_5;
  j["recallNegAt5"] = m.recall_neg_at_5;
  j["hardNegativeDiscrimination"] = m.hardneg_discrimination;
  j["mcq"] = to_json(m.mcq)["mcq"];
  return j;
}

std::string metrics_csv(const ToyMetrics& m) {
  std::ostringstream out;
  out.precision(10);
  out << "name,slice,value,count\n";
  out << "recall_at_k,5," << m.recall_at_5 << ',' << m.mcq.retrieval_queries << '\n';
  out << "recall_neg_at_k,5," << m.recall_neg_at_5 << ',' << m.mcq.retrieval_queries << '\n';
  out << "hardneg_discrimination,pairs," << m.hardneg_discrimination << ",\n";
  auto eval = to_csv(m.mcq);
  // Skip the header and the recall row already written above.
  std::istringstream in(eval);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.starts_with("recall_at_k,")) out << line << '\n';
  }
  return out.str();
}

EmbeddingTable model_table(const Eigen::MatrixXd& map, std::string_view prefix) {
  EmbeddingTable t(static_cast<std::size_t>(map.cols()));
  for (Eigen::Index i = 0; i < map.rows(); ++i) {
    std::ostringstream id;
    id << prefix << std::setw(4) << std::setfill('0') << i;
    std::vector<double> row(static_cast<std::size_t>(map.cols()));
    for (Eigen::Index j = 0; j < map.cols(); ++j) row[static_cast<std::size_t>(j)] = map(i, j);
    t.insert(id.str(), std::move(row));
  }
  return t;
}

Eigen::MatrixXd matrix_from_table(const EmbeddingTable& table) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(table.dim()));
  Eigen::Index i = 0;
  for (const auto& [id, row] : table) {
    for (std::size_t j = 0; j < row.size(); ++j) m(i, static_cast<Eigen::Index>(j)) = row[j];
    ++i;
  }
  return m;
}

EmbeddingTable embed_captions(const TwoTowerModel& model, const ToyVocabulary& vocab, TextMode mode,
                              std::span<const std::pair<std::string, std::string>> captions) {
  if (captions.empty()) return EmbeddingTable(model.dim());
  TextFeatures text(vocab, mode);
  std::vector<std::string> ids, texts;
  for (const auto& [id, t] : captions) {
    ids.push_back(id);
    texts.push_back(t);
  }
  return to_table(ids, model.embed_texts(text.matrix(texts)));
}

EmbeddingTable embed_scenes(const TwoTowerModel& model, const ToyVocabulary& vocab,
                            std::span<const SceneRecord> scenes, std::uint64_t dataset_seed,
                            double sigma) {
  if (scenes.empty()) return EmbeddingTable(model.dim());
  std::vector<std::string> ids;
  std::vector<Eigen::VectorXd> x;
  for (const auto& s : scenes) {
    ids.push_back(s.id);
    x.push_back(featurize_image(s, vocab, dataset_seed, sigma));
  }
  return to_table(ids, model.embed_images(columns(x, vocab.V())));
}

}  // namespace negsuite
