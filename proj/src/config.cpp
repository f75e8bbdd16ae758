#include "rasgg/config.hpp"

#include "rasgg/checkpoint.hpp"
#include "rasgg/hash.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace rasgg {

void RunConfig::validate() const {
  if (!(train.lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(train.momentum >= 0.0 && train.momentum < 1.0)) throw ConfigError("train.momentum must lie in [0,1)");
  if (train.pretrain_epochs < 0 || train.epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (train.optimizer != "sgd") throw ConfigError("train.optimizer must be \"sgd\"");
  if (train.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
  if (train.threads < 1) throw ConfigError("train.threads must be >= 1");
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw ConfigError("data.test_frac must lie in (0,1)");
  if (bank.cap < 1) throw ConfigError("bank.cap must be >= 1");
  if (eval.ks.empty()) throw ConfigError("eval.ks must not be empty");
  for (auto k : eval.ks) {
    if (k < 1) throw ConfigError("eval.ks entries must be >= 1");
  }
  if (loss.gamma_prime < 0.0) throw ConfigError("loss.gamma_prime must be >= 0");
  if (model.embed_dim < 1 || model.word_dim < 1 || model.proj_hidden < 1 || model.proj_out < 1) {
    throw ConfigError("model dimensions must be >= 1");
  }
  if (ablate_seeds.empty()) throw ConfigError("ablate.seeds must not be empty");
  try {
    aug.validate();
    generator().validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

GeneratorConfig RunConfig::generator() const {
  GeneratorConfig g = gen;
  g.seed = seed;
  return g;
}

namespace {

/// Reads known keys out of a TOML document and remembers which ones it saw.
class Reader {
 public:
  explicit Reader(const toml::table& root) : root_(root) {}

  template <typename T>
  void get(std::string_view path, T& out) {
    seen_.emplace(path);
    const auto node = root_.at_path(path);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      out = require(node.template value<bool>(), path, "a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      out = require(node.template value<std::string>(), path, "a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      out = require(node.template value<double>(), path, "a number");
    } else {
      const auto v = require(node.template value<std::int64_t>(), path, "an integer");
      if (std::is_unsigned_v<T> && v < 0) throw ConfigError(std::string(path) + " must be >= 0");
      out = static_cast<T>(v);
    }
  }

  template <typename T>
  void get_list(std::string_view path, std::vector<T>& out) {
    seen_.emplace(path);
    const auto node = root_.at_path(path);
    if (!node) return;
    const auto* arr = node.as_array();
    if (arr == nullptr) throw ConfigError(std::string(path) + " must be an array");
    out.clear();
    for (const auto& e : *arr) {
      const auto v = e.template value<std::int64_t>();
      if (!v || *v < 0) throw ConfigError(std::string(path) + " must hold nonnegative integers");
      out.push_back(static_cast<T>(*v));
    }
  }

  /// Throws on any leaf key that was never requested.
  void reject_unknown() const { walk(root_, ""); }

 private:
  template <typename V>
  static V require(std::optional<V> v, std::string_view path, const char* what) {
    if (!v) throw ConfigError(std::string(path) + " must be " + what);
    return *v;
  }

  void walk(const toml::table& t, const std::string& prefix) const {
    for (const auto& [k, v] : t) {
      const std::string key = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
      if (const auto* sub = v.as_table()) {
        walk(*sub, key);
      } else if (!seen_.contains(key)) {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  }

  const toml::table& root_;
  std::set<std::string, std::less<>> seen_;
};

}  // namespace

RunConfig parse_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  RunConfig c;
  Reader r(root);
  r.get("seed", c.seed);

  r.get("model.embed_dim", c.model.embed_dim);
  r.get("model.word_dim", c.model.word_dim);
  r.get("model.proj_hidden", c.model.proj_hidden);
  r.get("model.proj_out", c.model.proj_out);
  r.get("model.embed_init_std", c.model.embed_init_std);
  r.get("model.gamma_init", c.model.gamma_init);
  std::string fusion = fusion_name(c.model.fusion);
  r.get("model.fusion", fusion);

  r.get("gen.n_clusters", c.gen.n_clusters);
  r.get("gen.fine_per_cluster", c.gen.fine_per_cluster);
  r.get("gen.zipf_s", c.gen.zipf_s);
  r.get("gen.n_scenes", c.gen.n_scenes);
  r.get("gen.relations_per_scene", c.gen.relations_per_scene);
  r.get("gen.noise_std", c.gen.noise_std);
  r.get("gen.multi_prob", c.gen.multi_prob);
  r.get("gen.feature_dim", c.gen.feature_dim);
  r.get("gen.entities_per_cluster", c.gen.entities_per_cluster);
  r.get("gen.second_fine_prob", c.gen.second_fine_prob);
  r.get("gen.centroid_scale", c.gen.centroid_scale);
  r.get("gen.fine_offset_scale", c.gen.fine_offset_scale);
  r.get("gen.entity_offset_scale", c.gen.entity_offset_scale);
  r.get("gen.background_frac", c.gen.background_frac);
  r.get("data.test_frac", c.test_frac);

  r.get("aug.k", c.aug.k);
  r.get("aug.tau", c.aug.tau);
  r.get("aug.alpha", c.aug.alpha);
  r.get("aug.beta", c.aug.beta);
  std::string strategy = strategy_name(c.aug.strategy);
  r.get("aug.strategy", strategy);
  r.get("aug.support_mask", c.aug.support_mask);
  r.get("aug.background_policy", c.aug.background_policy);
  r.get("aug.lambda_floor", c.aug.lambda_floor);
  r.get("aug.use_selection", c.aug.use_selection);
  r.get("aug.use_ips", c.aug.use_ips);

  r.get("loss.gamma_prime", c.loss.gamma_prime);
  r.get("loss.reg1_weight", c.loss.reg1_weight);
  r.get("loss.reg2_weight", c.loss.reg2_weight);

  r.get("bank.cap", c.bank.cap);
  std::string selection = c.bank.selection == BankSelection::kFirstInOrder ? "first" : "random";
  r.get("bank.selection", selection);

  r.get("train.lr", c.train.lr);
  r.get("train.momentum", c.train.momentum);
  r.get("train.batch_size", c.train.batch_size);
  r.get("train.pretrain_epochs", c.train.pretrain_epochs);
  r.get("train.epochs", c.train.epochs);
  r.get("train.optimizer", c.train.optimizer);
  r.get("train.weight_decay", c.train.weight_decay);
  r.get("train.cold_start", c.train.cold_start);
  r.get("train.feat_aug_hidden", c.train.feat_aug_hidden);
  r.get("train.threads", c.train.threads);

  r.get_list("eval.ks", c.eval.ks);
  r.get("eval.head_frac", c.eval.grouping.head_frac);
  r.get("eval.tail_frac", c.eval.grouping.tail_frac);
  r.get_list("ablate.seeds", c.ablate_seeds);
  r.reject_unknown();

  try {
    c.model.fusion = parse_fusion(fusion);
    c.aug.strategy = parse_strategy(strategy);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (selection == "first") {
    c.bank.selection = BankSelection::kFirstInOrder;
  } else if (selection == "random") {
    c.bank.selection = BankSelection::kSeededRandom;
  } else {
    throw ConfigError("bank.selection must be \"first\" or \"random\"");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["model"] = {{"embed_dim", c.model.embed_dim},
                {"word_dim", c.model.word_dim},
                {"proj_hidden", c.model.proj_hidden},
                {"proj_out", c.model.proj_out},
                {"embed_init_std", c.model.embed_init_std},
                {"gamma_init", c.model.gamma_init},
                {"fusion", fusion_name(c.model.fusion)}};
  j["gen"] = {{"n_clusters", c.gen.n_clusters},
              {"fine_per_cluster", c.gen.fine_per_cluster},
              {"zipf_s", c.gen.zipf_s},
              {"n_scenes", c.gen.n_scenes},
              {"relations_per_scene", c.gen.relations_per_scene},
              {"noise_std", c.gen.noise_std},
              {"multi_prob", c.gen.multi_prob},
              {"feature_dim", c.gen.feature_dim},
              {"entities_per_cluster", c.gen.entities_per_cluster},
              {"second_fine_prob", c.gen.second_fine_prob},
              {"centroid_scale", c.gen.centroid_scale},
              {"fine_offset_scale", c.gen.fine_offset_scale},
              {"entity_offset_scale", c.gen.entity_offset_scale},
              {"background_frac", c.gen.background_frac}};
  j["data"] = {{"test_frac", c.test_frac}};
  j["aug"] = {{"k", c.aug.k},
              {"tau", c.aug.tau},
              {"alpha", c.aug.alpha},
              {"beta", c.aug.beta},
              {"strategy", strategy_name(c.aug.strategy)},
              {"support_mask", c.aug.support_mask},
              {"background_policy", c.aug.background_policy},
              {"lambda_floor", c.aug.lambda_floor},
              {"use_selection", c.aug.use_selection},
              {"use_ips", c.aug.use_ips}};
  j["loss"] = {{"gamma_prime", c.loss.gamma_prime},
               {"reg1_weight", c.loss.reg1_weight},
               {"reg2_weight", c.loss.reg2_weight}};
  j["bank"] = {{"cap", c.bank.cap},
               {"selection", c.bank.selection == BankSelection::kFirstInOrder ? "first" : "random"}};
  j["train"] = {{"lr", c.train.lr},
                {"momentum", c.train.momentum},
                {"batch_size", c.train.batch_size},
                {"pretrain_epochs", c.train.pretrain_epochs},
                {"epochs", c.train.epochs},
                {"optimizer", c.train.optimizer},
                {"weight_decay", c.train.weight_decay},
                {"cold_start", c.train.cold_start},
                {"feat_aug_hidden", c.train.feat_aug_hidden}};
  j["eval"] = {{"ks", c.eval.ks},
               {"head_frac", c.eval.grouping.head_frac},
               {"tail_frac", c.eval.grouping.tail_frac}};
  j["ablate"] = {{"seeds", c.ablate_seeds}};
  return j.dump();
}

std::string config_hash(const RunConfig& cfg) { return to_hex(sha256(canonical_config_json(cfg))); }

}  // namespace rasgg
