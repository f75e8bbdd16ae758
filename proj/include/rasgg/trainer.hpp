#ifndef RASGG_TRAINER_HPP_
#define RASGG_TRAINER_HPP_

#include "rasgg/augmentor.hpp"
#include "rasgg/config.hpp"
#include "rasgg/encoder.hpp"
#include "rasgg/loss.hpp"
#include "rasgg/memory_bank.hpp"
#include "rasgg/metrics.hpp"
#include "rasgg/relation.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace rasgg {

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("training", what) {}
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;  // mean batch objective
  std::size_t instances = 0;
  std::size_t labeled = 0;
  std::size_t multi = 0;
  std::size_t background = 0;
  std::size_t skipped = 0;
  std::size_t mixup_fallbacks = 0;
  double selection_rate = 0.0;  // multi / labeled
  std::vector<std::size_t> aug_histogram;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParameters<double> params;
  std::vector<EpochLog> epochs;
  std::size_t batches = 0;
  double seconds = 0.0;  // wall time inside the batch loop

  double seconds_per_100_batches() const {
    return batches == 0 ? 0.0 : 100.0 * seconds / static_cast<double>(batches);
  }
};

/// Everything one training run needs besides the starting parameters.
struct TrainSettings {
  AugmentConfig aug;
  LossConfig loss;
  TrainConfig train;
  int epochs = 0;
  int first_epoch = 0;        // offsets the per-epoch data-order substream
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> dump_dir;  // diagnostic dump on non-finite loss
  std::ostream* log = nullptr;
};

/// Mini-batch SGD with momentum on the final objective. Each batch: embed,
/// query the bank, select, sample, apply the strategy, accumulate the loss,
/// one backward pass, one parameter update. With strategy none the bank is
/// not consulted and may be null.
TrainResult train_loop(ModelParameters<double> init, const Dataset& data,
                       const PropensityTable& prop, const MemoryBank* bank,
                       const TrainSettings& settings);

/// Model dimensions for a vocabulary and feature width.
ModelConfig model_config_for(const RunConfig& cfg, const Vocabulary& vocab,
                             Eigen::Index feature_dim);

/// Vanilla training from a seeded initialization (strategy none).
TrainResult pretrain(const RunConfig& cfg, const Vocabulary& vocab, const Dataset& train,
                     std::ostream* log = nullptr,
                     const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

/// Retrieval-augmented training. Starts from `pretrained` unless
/// train.cold_start is set, in which case it starts from the same seeded
/// initialization as pretrain(). The bank may be null only for strategy none.
TrainResult train_ra(const RunConfig& cfg, const ModelParameters<double>& pretrained,
                     const Dataset& train, const PropensityTable& prop, const MemoryBank* bank,
                     std::ostream* log = nullptr,
                     const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

/// Evaluation that also runs test-time retrieval when the model carries the
/// feature-augmentation MLP.
EvalReport evaluate_model(const ModelParameters<double>& params, const Dataset& data,
                          const ClassGrouping& grouping, const RunConfig& cfg,
                          const MemoryBank* bank);

void write_epoch_log_csv(const std::vector<EpochLog>& log, std::ostream& out);

/// In-memory artifacts of gen-data -> pretrain -> build-bank for one seed.
struct Pipeline {
  Vocabulary vocab;
  Dataset train;
  Dataset test;
  PropensityTable prop;
  ClassGrouping grouping;
  ModelParameters<double> pretrained;
  MemoryBank bank;
};

Pipeline prepare_pipeline(const RunConfig& cfg, std::ostream* log = nullptr);

struct Variant {
  std::string name;
  Strategy strategy = Strategy::kLabelAug;
  bool use_selection = true;
  bool use_ips = true;
};

/// vanilla, wo_select, wo_ipss, full.
std::vector<Variant> ablation_variants();
/// none, feat_aug, label_aug, mixup (all with selection and IPS).
std::vector<Variant> strategy_variants();

struct VariantResult {
  EvalReport report;
  TrainResult training;
};

/// Trains one variant from the pipeline's pretrained model and evaluates it
/// on the test split. The vanilla variant keeps training with strategy none
/// for the same number of epochs.
VariantResult run_variant(const Pipeline& pipe, const RunConfig& cfg, const Variant& v);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one seed
};

struct AblationRow {
  std::string variant;
  std::size_t n_seeds = 0;
  std::map<std::size_t, MetricSummary> r, mr, f;
};

MetricSummary summarize(const std::vector<double>& values);

/// Runs every variant for every seed in cfg.ablate_seeds.
std::vector<AblationRow> ablate(const RunConfig& cfg, const std::vector<Variant>& variants,
                                std::ostream* log = nullptr);

void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out);

/// One row per instance and one per prototype: kind,id,class,x0..x(o-1)
/// with unit-norm coordinates. Background instances get class -1.
void export_embeddings(const ModelParameters<double>& params, const Dataset& data,
                       std::ostream& out);

}  // namespace rasgg

#endif  // RASGG_TRAINER_HPP_
