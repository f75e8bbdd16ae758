#ifndef RASGG_CONFIG_HPP_
#define RASGG_CONFIG_HPP_

#include "rasgg/augmentor.hpp"
#include "rasgg/encoder.hpp"
#include "rasgg/loss.hpp"
#include "rasgg/memory_bank.hpp"
#include "rasgg/relation.hpp"
#include "rasgg/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rasgg {

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  int pretrain_epochs = 20;
  int epochs = 3;            // RA training (and the continued vanilla baseline)
  std::string optimizer = "sgd";
  double weight_decay = 0.0;
  bool cold_start = false;   // RA training from a fresh initialization
  Eigen::Index feat_aug_hidden = 64;
  unsigned threads = 1;      // worker pool for bank builds and evaluation
};

struct EvalConfig {
  std::vector<std::size_t> ks{20, 50, 100};
  GroupingConfig grouping;
};

struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;  // n_entities / n_predicates / feature_dim come from the data
  GeneratorConfig gen;
  double test_frac = 0.2;
  AugmentConfig aug;
  LossConfig loss;
  BankBuildConfig bank;
  TrainConfig train;
  EvalConfig eval;
  std::vector<std::uint64_t> ablate_seeds{0, 1, 2, 3, 4};

  void validate() const;
  /// Generator settings with the run seed applied.
  GeneratorConfig generator() const;
};

/// Parses TOML text. Unknown keys are rejected so typos do not pass silently.
RunConfig parse_config(std::string_view toml_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON text of every setting; the config hash is taken over it.
std::string canonical_config_json(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace rasgg

#endif  // RASGG_CONFIG_HPP_
