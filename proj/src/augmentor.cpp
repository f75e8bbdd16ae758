#include "rasgg/augmentor.hpp"

#include "rasgg/rng.hpp"

#include <cmath>
#include <limits>

namespace rasgg {

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kNone: return "none";
    case Strategy::kLabelAug: return "label_aug";
    case Strategy::kFeatAug: return "feat_aug";
    case Strategy::kMixup: return "mixup";
  }
  return "none";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "none") return Strategy::kNone;
  if (name == "label_aug") return Strategy::kLabelAug;
  if (name == "feat_aug") return Strategy::kFeatAug;
  if (name == "mixup") return Strategy::kMixup;
  throw AugmentError("unknown strategy '" + name + "'");
}

void AugmentConfig::validate() const {
  if (k < 1) throw AugmentError("aug.k must be >= 1");
  if (!(tau >= 0.0 && tau <= 1.0)) throw AugmentError("aug.tau must lie in [0,1]");
  if (!(alpha > 0.0 && beta > 0.0)) throw AugmentError("aug.alpha and aug.beta must be > 0");
  if (!(lambda_floor >= 0.0 && lambda_floor <= 1.0)) {
    throw AugmentError("aug.lambda_floor must lie in [0,1]");
  }
}

double inconsistency(std::size_t gt, std::span<const std::size_t> retrieved) {
  if (retrieved.empty()) throw AugmentError("inconsistency needs at least one neighbor");
  std::size_t disagree = 0;
  for (auto c : retrieved) disagree += (c != gt) ? 1 : 0;
  // disagree / K rather than 1 - agree / K: exact for the tau boundary
  return static_cast<double>(disagree) / static_cast<double>(retrieved.size());
}

bool select(std::size_t gt, std::span<const std::size_t> retrieved, double tau) {
  return inconsistency(gt, retrieved) >= tau;
}

VectorXd sampling_weights(std::span<const std::size_t> retrieved, const PropensityTable& prop,
                          bool support_mask, bool use_ips) {
  if (retrieved.empty()) throw AugmentError("sampling weights need at least one neighbor");
  const auto n = static_cast<Eigen::Index>(prop.n_p());
  VectorXd a = VectorXd::Zero(n);
  std::vector<bool> support(static_cast<std::size_t>(n), !support_mask);
  for (auto c : retrieved) {
    if (c >= prop.n_p()) throw AugmentError("retrieved class out of range");
    a[static_cast<Eigen::Index>(c)] += use_ips ? prop.inverse[static_cast<Eigen::Index>(c)] : 1.0;
    support[c] = true;
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (support[static_cast<std::size_t>(i)]) mx = std::max(mx, a[i]);
  }
  VectorXd w = VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (support[static_cast<std::size_t>(i)]) w[i] = std::exp(a[i] - mx);
  }
  return w / w.sum();
}

AugmentedLabel single_label(std::size_t n_p, std::size_t gt) {
  AugmentedLabel a;
  a.gt = gt;
  a.aug = gt;
  a.lambda = 1.0;
  a.mixed = LabelDistribution::one_hot(n_p, gt);
  a.is_multi = false;
  return a;
}

std::vector<AugmentResult> augment_embeddings(const MatrixXd& embeddings,
                                              std::span<const RelationInstance* const> batch,
                                              const MemoryBank& bank, const PropensityTable& prop,
                                              const AugmentConfig& cfg, std::uint64_t seed,
                                              std::uint64_t epoch, AugmentStats* stats) {
  cfg.validate();
  if (static_cast<std::size_t>(embeddings.cols()) != batch.size()) {
    throw AugmentError("embedding count does not match the batch");
  }
  const std::size_t n_p = prop.n_p();
  AugmentStats st;
  st.aug_histogram.assign(n_p, 0);
  std::vector<AugmentResult> out(batch.size());

  std::vector<std::vector<Neighbor>> neighbors;
  if (cfg.strategy != Strategy::kNone) {
    if (bank.empty()) throw AugmentError("memory bank is empty");
    neighbors = bank.query_batch(embeddings, cfg.k);
  }

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const RelationInstance& inst = *batch[i];
    auto& res = out[i];
    ++st.instances;
    if (cfg.strategy == Strategy::kNone) {
      if (inst.is_background()) {
        res.label.background = true;
        res.label.skipped = true;
        ++st.skipped;
      } else {
        res.label = single_label(n_p, static_cast<std::size_t>(*inst.predicate));
      }
      continue;
    }
    res.neighbors = std::move(neighbors[i]);
    std::vector<std::size_t> classes;
    classes.reserve(res.neighbors.size());
    for (const auto& nb : res.neighbors) classes.push_back(bank.value(nb.index));

    auto stream = [&] { return make_light_stream(seed, "augment", epoch, static_cast<std::uint64_t>(inst.id)); };
    if (inst.is_background()) {
      ++st.background;
      if (!cfg.background_policy || classes.empty()) {
        res.label.background = true;
        res.label.skipped = true;
        ++st.skipped;
        continue;
      }
      // No ground truth: skip selection and use the sampled label alone.
      const VectorXd w = sampling_weights(classes, prop, cfg.support_mask, cfg.use_ips);
      auto rng = stream();
      const std::size_t aug = sample_categorical(w, rng);
      res.label = single_label(n_p, aug);
      res.label.lambda = 0.0;
      res.label.is_multi = true;
      res.label.background = true;
      ++st.aug_histogram[aug];
      continue;
    }

    const auto gt = static_cast<std::size_t>(*inst.predicate);
    const bool multi = !classes.empty() && (!cfg.use_selection || select(gt, classes, cfg.tau));
    if (!multi) {
      res.label = single_label(n_p, gt);
      continue;
    }
    const VectorXd w = sampling_weights(classes, prop, cfg.support_mask, cfg.use_ips);
    auto rng = stream();
    res.label = sample_augmented(gt, w, rng, cfg.alpha, cfg.beta, cfg.lambda_floor);
    ++st.multi;
    ++st.aug_histogram[res.label.aug];
  }
  if (stats != nullptr) *stats = std::move(st);
  return out;
}

std::vector<AugmentedLabel> augment_batch(const ModelParameters<double>& params,
                                          const Dataset& batch, const MemoryBank& bank,
                                          const PropensityTable& prop, const AugmentConfig& cfg,
                                          std::uint64_t seed, std::uint64_t epoch,
                                          AugmentStats* stats) {
  MatrixXd emb(params.config.embed_dim, static_cast<Eigen::Index>(batch.size()));
  std::vector<const RelationInstance*> ptrs;
  ptrs.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    emb.col(static_cast<Eigen::Index>(i)) = encode_relation(params, batch[i]).relation;
    ptrs.push_back(&batch[i]);
  }
  auto results = augment_embeddings(emb, ptrs, bank, prop, cfg, seed, epoch, stats);
  std::vector<AugmentedLabel> labels;
  labels.reserve(results.size());
  for (auto& r : results) labels.push_back(std::move(r.label));
  return labels;
}

StrategyOutput apply_strategy(const ModelParameters<double>& params, Strategy strategy,
                              const VectorXd& r, const AugmentedLabel& label,
                              std::span<const Neighbor> neighbors, const MemoryBank& bank) {
  using Kind = EmbeddingEdit<double>::Kind;
  const auto n_p = static_cast<std::size_t>(params.config.n_predicates);
  StrategyOutput out;
  const LabelDistribution plain =
      label.background ? label.mixed : LabelDistribution::one_hot(n_p, label.gt);
  switch (strategy) {
    case Strategy::kNone:
      out.embedding = r;
      out.target = plain;
      break;
    case Strategy::kLabelAug:
      out.embedding = r;
      out.target = label.mixed;
      break;
    case Strategy::kFeatAug: {
      out.edit.kind = Kind::kFeatAug;
      out.edit.feat_input = VectorXd::Zero(static_cast<Eigen::Index>(n_p));
      for (const auto& nb : neighbors) out.edit.feat_input[bank.value(nb.index)] += 1.0;
      if (!neighbors.empty()) out.edit.feat_input /= static_cast<double>(neighbors.size());
      out.embedding = apply_edit(params, r, out.edit);
      out.target = plain;
      break;
    }
    case Strategy::kMixup: {
      out.target = label.mixed;
      if (label.lambda == 1.0) {
        out.embedding = r;
        break;
      }
      const Neighbor* partner = nullptr;
      for (const auto& nb : neighbors) {
        if (bank.value(nb.index) == label.aug) {
          partner = &nb;
          break;
        }
      }
      if (partner == nullptr) {
        out.embedding = r;
        out.fell_back = true;
        break;
      }
      out.edit.kind = Kind::kMixup;
      out.edit.lambda = label.lambda;
      out.edit.partner = bank.key(partner->index);
      out.embedding = apply_edit(params, r, out.edit);
      break;
    }
  }
  return out;
}

}  // namespace rasgg
