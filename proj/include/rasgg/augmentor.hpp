#ifndef RASGG_AUGMENTOR_HPP_
#define RASGG_AUGMENTOR_HPP_

#include "rasgg/encoder.hpp"
#include "rasgg/memory_bank.hpp"
#include "rasgg/relation.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rasgg {

class AugmentError : public Error {
 public:
  explicit AugmentError(const std::string& what) : Error("augment", what) {}
};

enum class Strategy { kNone, kLabelAug, kFeatAug, kMixup };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

struct AugmentConfig {
  std::size_t k = 5;
  double tau = 0.3;
  double alpha = 2.0;
  double beta = 2.0;
  Strategy strategy = Strategy::kLabelAug;
  bool support_mask = true;        // sample only among retrieved classes
  bool background_policy = true;   // pseudo-label background relations
  double lambda_floor = 0.0;       // lambda = max(lambda, floor)
  bool use_selection = true;       // false: every instance treated as multi
  bool use_ips = true;             // false: constant 1.0 instead of inverse propensity

  void validate() const;
};

struct AugmentedLabel {
  std::size_t gt = 0;
  std::size_t aug = 0;
  double lambda = 1.0;
  LabelDistribution mixed;
  bool is_multi = false;
  bool background = false;
  bool skipped = false;  // background relation excluded from the loss
};

/// Fraction of retrieved predicates that disagree with gt.
double inconsistency(std::size_t gt, std::span<const std::size_t> retrieved);

/// True when the instance joins the multi-label set (d >= tau).
bool select(std::size_t gt, std::span<const std::size_t> retrieved, double tau);

/// Softmax of per-class summed inverse propensities of the retrieved
/// predicates. With `support_mask` the softmax runs over retrieved classes
/// only; `use_ips = false` replaces every inverse propensity with 1.
VectorXd sampling_weights(std::span<const std::size_t> retrieved, const PropensityTable& prop,
                          bool support_mask, bool use_ips = true);

/// Draws aug ~ Categorical(w) and lambda ~ Beta(alpha, beta).
template <typename Engine>
AugmentedLabel sample_augmented(std::size_t gt, const VectorXd& w, Engine& rng, double alpha,
                                double beta, double lambda_floor = 0.0) {
  AugmentedLabel a;
  a.gt = gt;
  a.aug = sample_categorical(w, rng);
  a.lambda = std::max(sample_beta(alpha, beta, rng), lambda_floor);
  a.mixed = LabelDistribution::mix(static_cast<std::size_t>(w.size()), a.gt, a.aug, a.lambda);
  a.is_multi = true;
  return a;
}

AugmentedLabel single_label(std::size_t n_p, std::size_t gt);

/// Augmentation result plus what the strategies need downstream.
struct AugmentResult {
  AugmentedLabel label;
  std::vector<Neighbor> neighbors;
};

struct AugmentStats {
  std::size_t instances = 0;
  std::size_t multi = 0;
  std::size_t background = 0;
  std::size_t skipped = 0;
  std::size_t mixup_fallbacks = 0;
  std::vector<std::size_t> aug_histogram;  // per class, multi instances only
};

/// Per-instance retrieval, selection and sampling for one batch, given the
/// current relation embeddings (one column per instance). Randomness for
/// instance i comes from substreams keyed by (seed, epoch, instance id).
std::vector<AugmentResult> augment_embeddings(const MatrixXd& embeddings,
                                              std::span<const RelationInstance* const> batch,
                                              const MemoryBank& bank, const PropensityTable& prop,
                                              const AugmentConfig& cfg, std::uint64_t seed,
                                              std::uint64_t epoch, AugmentStats* stats = nullptr);

/// Embeds the batch with `params` and runs augment_embeddings().
std::vector<AugmentedLabel> augment_batch(const ModelParameters<double>& params,
                                          const Dataset& batch, const MemoryBank& bank,
                                          const PropensityTable& prop, const AugmentConfig& cfg,
                                          std::uint64_t seed, std::uint64_t epoch = 0,
                                          AugmentStats* stats = nullptr);

struct StrategyOutput {
  VectorXd embedding;
  LabelDistribution target;
  EmbeddingEdit<double> edit;
  bool fell_back = false;  // mix-up without a retrieved entry of class aug
};

/// Applies a retrieval strategy to a relation embedding and its label:
///   none      -> (r, onehot(gt))
///   label_aug -> (r, mixed)
///   feat_aug  -> (r + MLP(mean one-hot of retrieved), onehot(gt))
///   mixup     -> (lambda r + (1 - lambda) r_aug, mixed)
StrategyOutput apply_strategy(const ModelParameters<double>& params, Strategy strategy,
                              const VectorXd& r, const AugmentedLabel& label,
                              std::span<const Neighbor> neighbors, const MemoryBank& bank);

}  // namespace rasgg

#endif  // RASGG_AUGMENTOR_HPP_
