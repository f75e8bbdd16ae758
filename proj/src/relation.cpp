#include "rasgg/relation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace rasgg {

using nlohmann::json;

PredicateVocabulary::PredicateVocabulary(std::vector<std::string> names)
    : names_(std::move(names)) {
  if (names_.size() < 2) {
    throw DatasetError("predicate vocabulary needs at least 2 classes");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw DatasetError("empty predicate name");
    if (!seen.insert(n).second) throw DatasetError("duplicate predicate name '" + n + "'");
  }
}

std::string Vocabulary::canonical_json() const {
  json j;
  j["predicates"] = predicates.names();
  j["entities"] = entities;
  return j.dump();
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open vocabulary file " + path.string());
  json j;
  try {
    in >> j;
    Vocabulary v;
    v.predicates = PredicateVocabulary(j.at("predicates").get<std::vector<std::string>>());
    v.entities = j.at("entities").get<std::vector<std::string>>();
    return v;
  } catch (const json::exception& e) {
    throw DatasetError("malformed vocabulary file " + path.string() + ": " + e.what());
  }
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write vocabulary file " + path.string());
  out << vocab.canonical_json() << '\n';
}

// --- LabelDistribution ------------------------------------------------------

LabelDistribution::LabelDistribution(VectorXd weights) : weights_(std::move(weights)) {
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0 && weights_[i] <= 1.0)) {
      throw DatasetError("label weight outside [0,1]");
    }
  }
  const double s = weights_.sum();
  if (s != 0.0 && std::abs(s - 1.0) > kSumTolerance) {
    throw DatasetError("label weights sum to " + std::to_string(s));
  }
}

LabelDistribution LabelDistribution::empty(std::size_t n_p) {
  return LabelDistribution(VectorXd::Zero(static_cast<Eigen::Index>(n_p)));
}

LabelDistribution LabelDistribution::one_hot(std::size_t n_p, std::size_t index) {
  if (index >= n_p) throw DatasetError("one-hot index out of range");
  VectorXd w = VectorXd::Zero(static_cast<Eigen::Index>(n_p));
  w[static_cast<Eigen::Index>(index)] = 1.0;
  return LabelDistribution(std::move(w));
}

LabelDistribution LabelDistribution::mix(std::size_t n_p, std::size_t first,
                                         std::size_t second, double lambda) {
  if (first >= n_p || second >= n_p) throw DatasetError("mix index out of range");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DatasetError("mix weight outside [0,1]");
  VectorXd w = VectorXd::Zero(static_cast<Eigen::Index>(n_p));
  w[static_cast<Eigen::Index>(first)] += lambda;
  w[static_cast<Eigen::Index>(second)] += 1.0 - lambda;
  return LabelDistribution(std::move(w));
}

bool LabelDistribution::is_one_hot() const {
  Eigen::Index ones = 0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (weights_[i] == 1.0) {
      ++ones;
    } else if (weights_[i] != 0.0) {
      return false;
    }
  }
  return ones == 1;
}

std::size_t LabelDistribution::hot_index() const {
  if (!is_one_hot()) throw DatasetError("label is not one-hot");
  Eigen::Index idx = 0;
  weights_.maxCoeff(&idx);
  return static_cast<std::size_t>(idx);
}

LabelDistribution RelationInstance::observed(std::size_t n_p) const {
  if (!predicate) return LabelDistribution::empty(n_p);
  return LabelDistribution::one_hot(n_p, static_cast<std::size_t>(*predicate));
}

// --- dataset I/O ------------------------------------------------------------

void validate_instance(const RelationInstance& inst, Eigen::Index feature_dim,
                       const Vocabulary* vocab) {
  const std::string who = "instance " + std::to_string(inst.id);
  if (inst.subj_feat.size() != feature_dim || inst.obj_feat.size() != feature_dim ||
      inst.union_feat.size() != feature_dim) {
    throw DatasetError(who + ": feature dimension mismatch (expected " +
                       std::to_string(feature_dim) + ", got " +
                       std::to_string(inst.subj_feat.size()) + "/" +
                       std::to_string(inst.obj_feat.size()) + "/" +
                       std::to_string(inst.union_feat.size()) + ")");
  }
  if (!inst.subj_feat.allFinite() || !inst.obj_feat.allFinite() ||
      !inst.union_feat.allFinite()) {
    throw DatasetError(who + ": non-finite feature value");
  }
  if (vocab != nullptr) {
    const auto n_e = static_cast<int>(vocab->n_entities());
    const auto n_p = static_cast<int>(vocab->n_p());
    if (inst.subj_class < 0 || inst.subj_class >= n_e || inst.obj_class < 0 ||
        inst.obj_class >= n_e) {
      throw DatasetError(who + ": entity class out of range");
    }
    if (inst.predicate && (*inst.predicate < 0 || *inst.predicate >= n_p)) {
      throw DatasetError(who + ": predicate out of range");
    }
    if (inst.latent) {
      for (int c : *inst.latent) {
        if (c < 0 || c >= n_p) throw DatasetError(who + ": latent class out of range");
      }
    }
  }
  if (inst.latent && inst.predicate &&
      std::find(inst.latent->begin(), inst.latent->end(), *inst.predicate) ==
          inst.latent->end()) {
    throw DatasetError(who + ": observed predicate not in latent set");
  }
}

namespace {

VectorXd to_vector(const json& arr) {
  const auto v = arr.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json to_json(const VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

Dataset parse_dataset(std::istream& in, const Vocabulary& vocab) {
  Dataset out;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    RelationInstance inst;
    try {
      const json j = json::parse(line);
      inst.id = j.at("id").get<std::int64_t>();
      inst.scene_id = j.at("scene_id").get<std::int64_t>();
      inst.subj_class = j.at("subj_class").get<int>();
      inst.obj_class = j.at("obj_class").get<int>();
      if (!j.at("predicate").is_null()) inst.predicate = j.at("predicate").get<int>();
      inst.subj_feat = to_vector(j.at("subj_feat"));
      inst.obj_feat = to_vector(j.at("obj_feat"));
      inst.union_feat = to_vector(j.at("union_feat"));
      if (j.contains("latent") && !j.at("latent").is_null()) {
        inst.latent = j.at("latent").get<std::vector<int>>();
      }
    } catch (const json::exception& e) {
      throw DatasetError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    }
    if (dim < 0) dim = inst.subj_feat.size();
    validate_instance(inst, dim, &vocab);
    out.push_back(std::move(inst));
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file " + path.string());
  return parse_dataset(in, vocab);
}

void write_dataset(const Dataset& data, std::ostream& out) {
  for (const auto& inst : data) {
    json j;
    j["id"] = inst.id;
    j["scene_id"] = inst.scene_id;
    j["subj_class"] = inst.subj_class;
    j["obj_class"] = inst.obj_class;
    j["predicate"] = inst.predicate ? json(*inst.predicate) : json(nullptr);
    j["subj_feat"] = to_json(inst.subj_feat);
    j["obj_feat"] = to_json(inst.obj_feat);
    j["union_feat"] = to_json(inst.union_feat);
    j["latent"] = inst.latent ? json(*inst.latent) : json(nullptr);
    out << j.dump() << '\n';
  }
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write dataset file " + path.string());
  write_dataset(data, out);
}

// --- propensity and grouping -----------------------------------------------

PropensityTable PropensityTable::from_frequency(VectorXd frequency) {
  PropensityTable t;
  t.inverse = frequency.unaryExpr([](double f) { return 1.0 / std::max(f, kEpsilon); });
  t.frequency = std::move(frequency);
  return t;
}

PropensityTable compute_propensity(const Dataset& data, std::size_t n_p) {
  std::vector<std::size_t> counts(n_p, 0);
  std::size_t labeled = 0;
  for (const auto& inst : data) {
    if (!inst.predicate) continue;
    const auto c = static_cast<std::size_t>(*inst.predicate);
    if (c >= n_p) throw DatasetError("predicate out of range in propensity count");
    ++counts[c];
    ++labeled;
  }
  if (labeled == 0) throw DatasetError("propensity needs at least one labeled instance");
  VectorXd freq(static_cast<Eigen::Index>(n_p));
  for (std::size_t i = 0; i < n_p; ++i) {
    freq[static_cast<Eigen::Index>(i)] =
        static_cast<double>(counts[i]) / static_cast<double>(labeled);
  }
  return PropensityTable::from_frequency(std::move(freq));
}

std::vector<ClassGrouping::Group> ClassGrouping::group_of_class() const {
  std::vector<Group> g(order.size(), Group::kBody);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (rank < head_end) {
      g[order[rank]] = Group::kHead;
    } else if (rank >= tail_begin) {
      g[order[rank]] = Group::kTail;
    }
  }
  return g;
}

ClassGrouping group_classes(const VectorXd& frequency, const GroupingConfig& cfg) {
  if (!(cfg.head_frac > 0.0 && cfg.head_frac < 1.0 && cfg.tail_frac > 0.0 &&
        cfg.tail_frac < 1.0 && cfg.head_frac + cfg.tail_frac < 1.0)) {
    throw DatasetError("grouping fractions must lie in (0,1) with head+tail < 1");
  }
  const auto n = static_cast<std::size_t>(frequency.size());
  ClassGrouping g;
  g.order.resize(n);
  std::iota(g.order.begin(), g.order.end(), std::size_t{0});
  std::stable_sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) {
    return frequency[static_cast<Eigen::Index>(a)] > frequency[static_cast<Eigen::Index>(b)];
  });
  double total = frequency.sum();
  VectorXd mass = frequency;
  if (total <= 0.0) {
    mass.setConstant(1.0);
    total = static_cast<double>(n);
  }
  constexpr double kSlack = 1e-12;
  // Smallest prefix covering head_frac, smallest suffix covering tail_frac.
  double acc = 0.0;
  g.head_end = n;
  for (std::size_t r = 0; r < n; ++r) {
    acc += mass[static_cast<Eigen::Index>(g.order[r])] / total;
    if (acc >= cfg.head_frac - kSlack) {
      g.head_end = r + 1;
      break;
    }
  }
  acc = 0.0;
  std::size_t tail_count = n;
  for (std::size_t k = 0; k < n; ++k) {
    acc += mass[static_cast<Eigen::Index>(g.order[n - 1 - k])] / total;
    if (acc >= cfg.tail_frac - kSlack) {
      tail_count = k + 1;
      break;
    }
  }
  g.tail_begin = std::max(g.head_end, n - tail_count);
  return g;
}

}  // namespace rasgg
