#include "rasgg/trainer.hpp"

#include "rasgg/checkpoint.hpp"
#include "rasgg/rng.hpp"
#include "rasgg/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace rasgg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void dump_batch(const std::filesystem::path& dir, int epoch, std::size_t batch_index,
                const std::vector<const RelationInstance*>& batch, double loss,
                const ModelParameters<double>& params) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["batch"] = batch_index;
  j["loss"] = std::isfinite(loss) ? nlohmann::ordered_json(loss) : nlohmann::ordered_json(std::to_string(loss));
  std::vector<std::int64_t> ids;
  for (const auto* inst : batch) ids.push_back(inst->id);
  j["instance_ids"] = ids;
  j["gamma"] = params.gamma();
  auto& finite = j["finite_tensors"];
  params.visit([&](std::string_view name, const auto& t) { finite[std::string(name)] = t.allFinite(); });
  std::ofstream out(dir / "nonfinite_batch.json");
  out << j.dump(2) << '\n';
}

}  // namespace

TrainResult train_loop(ModelParameters<double> init, const Dataset& data,
                       const PropensityTable& prop, const MemoryBank* bank,
                       const TrainSettings& s) {
  const auto& tc = s.train;
  const auto n_p = static_cast<std::size_t>(init.config.n_predicates);
  if (prop.n_p() != n_p) throw TrainingError("propensity table does not match the model");
  const bool retrieval = s.aug.strategy != Strategy::kNone;
  if (retrieval && (bank == nullptr || bank->empty())) {
    throw TrainingError("strategy " + strategy_name(s.aug.strategy) + " needs a memory bank");
  }
  if (retrieval && bank->dim() != init.config.embed_dim) {
    throw TrainingError("memory bank dimension does not match the model");
  }
  if (s.aug.strategy == Strategy::kFeatAug && !init.has_feat_aug()) {
    throw TrainingError("feat_aug training needs the feature-augmentation MLP");
  }
  static const MemoryBank kNoBank;
  const MemoryBank& mb = bank != nullptr ? *bank : kNoBank;

  TrainResult res;
  res.params = std::move(init);
  auto& params = res.params;
  ModelParameters<double> velocity = ModelParameters<double>::zeros_like(params);

  std::vector<std::size_t> order(data.size());
  for (int e = 0; e < s.epochs; ++e) {
    const int epoch = s.first_epoch + e;
    const auto epoch_t0 = Clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto data_rng = make_stream(s.seed, "data", static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), data_rng);

    EpochLog log;
    log.epoch = epoch;
    log.aug_histogram.assign(n_p, 0);
    double loss_sum = 0.0;
    std::size_t loss_batches = 0;
    std::size_t batch_index = 0;
    double window_seconds = 0.0;

    for (std::size_t start = 0; start < order.size(); start += tc.batch_size, ++batch_index) {
      const auto batch_t0 = Clock::now();
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      std::vector<const RelationInstance*> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(&data[order[i]]);
      const auto B = static_cast<Eigen::Index>(batch.size());

      const auto protos = make_prototypes(params);
      std::vector<RelationCache<double>> rels;
      rels.reserve(batch.size());
      for (const auto* inst : batch) rels.push_back(encode_relation(params, *inst));
      MatrixXd emb(retrieval ? params.config.embed_dim : 0, B);
      if (retrieval) {
        for (Eigen::Index i = 0; i < B; ++i) emb.col(i) = rels[static_cast<std::size_t>(i)].relation;
      }
      AugmentStats st;
      auto labels = augment_embeddings(emb, batch, mb, prop, s.aug, s.seed,
                                       static_cast<std::uint64_t>(epoch), &st);
      log.instances += st.instances;
      log.multi += st.multi;
      log.background += st.background;
      log.skipped += st.skipped;
      for (std::size_t c = 0; c < n_p; ++c) log.aug_histogram[c] += st.aug_histogram[c];

      std::vector<std::size_t> used;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!labels[i].label.skipped) used.push_back(i);
        if (!batch[i]->is_background()) ++log.labeled;
      }
      if (used.empty()) continue;

      const double inv_n = 1.0 / static_cast<double>(used.size());
      Backprop<double> bp(params, protos);
      double ce = 0.0;
      for (std::size_t i : used) {
        const auto& ar = labels[i];
        StrategyOutput so = apply_strategy(params, s.aug.strategy, rels[i].relation, ar.label,
                                           ar.neighbors, mb);
        if (so.fell_back) ++log.mixup_fallbacks;
        const auto out = forward_from(params, std::move(rels[i]), std::move(so.edit), protos);
        VectorXd dl;
        ce += soft_cross_entropy<double>(out.logits, so.target.weights(), &dl);
        bp.add_logits(out, inv_n * dl);
      }
      const auto sim = prototype_similarity(protos->unit);
      const auto dist = prototype_distance(protos->unit, s.loss.gamma_prime);
      bp.add_prototypes(s.loss.reg1_weight * sim.dcbar + s.loss.reg2_weight * dist.dcbar);
      const double loss =
          inv_n * ce + s.loss.reg1_weight * sim.value + s.loss.reg2_weight * dist.value;
      ModelParameters<double> grad = bp.finish();

      if (!std::isfinite(loss) || !grad.all_finite()) {
        if (s.dump_dir) dump_batch(*s.dump_dir, epoch, batch_index, batch, loss, params);
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      if (tc.weight_decay > 0.0) {
        grad.zip(params, [&](std::string_view, auto& g, const auto& p) { g += tc.weight_decay * p; });
      }
      // v <- mu v + g;  p <- p - lr v
      velocity *= tc.momentum;
      velocity += grad;
      params.zip(velocity, [&](std::string_view, auto& p, const auto& v) { p -= tc.lr * v; });

      loss_sum += loss;
      ++loss_batches;
      ++res.batches;
      const double dt = seconds_since(batch_t0);
      res.seconds += dt;
      window_seconds += dt;
      if (s.log != nullptr && res.batches % 100 == 0) {
        *s.log << "  batches " << res.batches << ": " << std::fixed << std::setprecision(4)
               << window_seconds << " s per 100 batches\n";
        window_seconds = 0.0;
      }
    }
    log.mean_loss = loss_batches == 0 ? 0.0 : loss_sum / static_cast<double>(loss_batches);
    log.selection_rate =
        log.labeled == 0 ? 0.0 : static_cast<double>(log.multi) / static_cast<double>(log.labeled);
    log.seconds = seconds_since(epoch_t0);
    if (s.log != nullptr) {
      *s.log << "epoch " << epoch << " loss " << std::setprecision(6) << log.mean_loss
             << " selection_rate " << std::setprecision(4) << log.selection_rate << " ("
             << log.seconds << " s)\n";
    }
    res.epochs.push_back(std::move(log));
  }
  return res;
}

ModelConfig model_config_for(const RunConfig& cfg, const Vocabulary& vocab,
                             Eigen::Index feature_dim) {
  ModelConfig m = cfg.model;
  m.feature_dim = feature_dim;
  m.n_entities = static_cast<Eigen::Index>(vocab.n_entities());
  m.n_predicates = static_cast<Eigen::Index>(vocab.n_p());
  m.feat_aug_hidden = 0;
  return m;
}

namespace {

Eigen::Index feature_dim_of(const Dataset& data) {
  if (data.empty()) throw TrainingError("training data is empty");
  return data.front().feature_dim();
}

TrainSettings settings_for(const RunConfig& cfg, int epochs, int first_epoch, std::ostream* log,
                           const std::optional<std::filesystem::path>& dump_dir) {
  TrainSettings s;
  s.aug = cfg.aug;
  s.loss = cfg.loss;
  s.train = cfg.train;
  s.epochs = epochs;
  s.first_epoch = first_epoch;
  s.seed = cfg.seed;
  s.log = log;
  s.dump_dir = dump_dir;
  return s;
}

}  // namespace

TrainResult pretrain(const RunConfig& cfg, const Vocabulary& vocab, const Dataset& train,
                     std::ostream* log, const std::optional<std::filesystem::path>& dump_dir) {
  const auto init =
      ModelParameters<double>::initialize(model_config_for(cfg, vocab, feature_dim_of(train)), cfg.seed);
  const auto prop = compute_propensity(train, vocab.n_p());
  TrainSettings s = settings_for(cfg, cfg.train.pretrain_epochs, 0, log, dump_dir);
  s.aug.strategy = Strategy::kNone;
  return train_loop(init, train, prop, nullptr, s);
}

TrainResult train_ra(const RunConfig& cfg, const ModelParameters<double>& pretrained,
                     const Dataset& train, const PropensityTable& prop, const MemoryBank* bank,
                     std::ostream* log, const std::optional<std::filesystem::path>& dump_dir) {
  ModelParameters<double> init =
      cfg.train.cold_start ? ModelParameters<double>::initialize(pretrained.config, cfg.seed)
                           : pretrained;
  if (cfg.aug.strategy == Strategy::kFeatAug) init.ensure_feat_aug(cfg.train.feat_aug_hidden, cfg.seed);
  // Warm starts continue the data-order substream after pretraining.
  const int first_epoch = cfg.train.cold_start ? 0 : cfg.train.pretrain_epochs;
  return train_loop(std::move(init), train, prop, bank,
                    settings_for(cfg, cfg.train.epochs, first_epoch, log, dump_dir));
}

EvalReport evaluate_model(const ModelParameters<double>& params, const Dataset& data,
                          const ClassGrouping& grouping, const RunConfig& cfg,
                          const MemoryBank* bank) {
  if (!params.has_feat_aug()) {
    return evaluate(params, data, cfg.eval.ks, grouping, cfg.train.threads);
  }
  if (bank == nullptr || bank->empty()) {
    throw TrainingError("a feat_aug model needs the memory bank at evaluation time");
  }
  const auto protos = make_prototypes(params);
  const auto n_p = params.config.n_predicates;
  const auto scenes = build_scenes(
      data,
      [&](const RelationInstance& inst) {
        auto rel = encode_relation(params, inst);
        EmbeddingEdit<double> edit;
        edit.kind = EmbeddingEdit<double>::Kind::kFeatAug;
        edit.feat_input = VectorXd::Zero(n_p);
        const auto nbs = bank->query(rel.relation, cfg.aug.k);
        for (const auto& nb : nbs) edit.feat_input[bank->value(nb.index)] += 1.0;
        if (!nbs.empty()) edit.feat_input /= static_cast<double>(nbs.size());
        const auto out = forward_from(params, std::move(rel), std::move(edit), protos);
        const std::size_t c = predict(out);
        return std::pair<std::size_t, double>{c, softmax(out.logits)[static_cast<Eigen::Index>(c)]};
      },
      cfg.train.threads);
  return make_report(scenes, cfg.eval.ks, static_cast<std::size_t>(n_p), grouping);
}

void write_epoch_log_csv(const std::vector<EpochLog>& log, std::ostream& out) {
  out << "epoch,loss,instances,labeled,multi,background,skipped,mixup_fallbacks,selection_rate,"
         "seconds,aug_histogram\n";
  out << std::setprecision(10);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.mean_loss << ',' << e.instances << ',' << e.labeled << ','
        << e.multi << ',' << e.background << ',' << e.skipped << ',' << e.mixup_fallbacks << ','
        << e.selection_rate << ',' << e.seconds << ',';
    for (std::size_t c = 0; c < e.aug_histogram.size(); ++c) {
      out << (c ? ";" : "") << e.aug_histogram[c];
    }
    out << '\n';
  }
}

Pipeline prepare_pipeline(const RunConfig& cfg, std::ostream* log) {
  Pipeline p;
  auto syn = generate(cfg.generator());
  p.vocab = std::move(syn.vocab);
  std::tie(p.train, p.test) = split_by_scene(syn.data, cfg.test_frac);
  p.prop = compute_propensity(p.train, p.vocab.n_p());
  p.grouping = group_classes(p.prop.frequency, cfg.eval.grouping);
  p.pretrained = pretrain(cfg, p.vocab, p.train, log).params;
  BankBuildConfig bc = cfg.bank;
  bc.seed = cfg.seed;
  bc.threads = cfg.train.threads;
  p.bank = MemoryBank::build(p.pretrained, p.train, bc);
  return p;
}

std::vector<Variant> ablation_variants() {
  return {{"vanilla", Strategy::kNone, true, true},
          {"wo_select", Strategy::kLabelAug, false, true},
          {"wo_ipss", Strategy::kLabelAug, true, false},
          {"full", Strategy::kLabelAug, true, true}};
}

std::vector<Variant> strategy_variants() {
  return {{"none", Strategy::kNone, true, true},
          {"feat_aug", Strategy::kFeatAug, true, true},
          {"label_aug", Strategy::kLabelAug, true, true},
          {"mixup", Strategy::kMixup, true, true}};
}

VariantResult run_variant(const Pipeline& pipe, const RunConfig& cfg, const Variant& v) {
  RunConfig c = cfg;
  c.aug.strategy = v.strategy;
  c.aug.use_selection = v.use_selection;
  c.aug.use_ips = v.use_ips;
  VariantResult r;
  r.training = train_ra(c, pipe.pretrained, pipe.train, pipe.prop, &pipe.bank);
  r.report = evaluate_model(r.training.params, pipe.test, pipe.grouping, c, &pipe.bank);
  return r;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<AblationRow> ablate(const RunConfig& cfg, const std::vector<Variant>& variants,
                                std::ostream* log) {
  std::vector<std::vector<EvalReport>> reports(variants.size());
  for (auto seed : cfg.ablate_seeds) {
    RunConfig c = cfg;
    c.seed = seed;
    if (log != nullptr) *log << "seed " << seed << ": preparing pipeline\n";
    const Pipeline pipe = prepare_pipeline(c);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      reports[v].push_back(run_variant(pipe, c, variants[v]).report);
      if (log != nullptr) {
        const auto& rep = reports[v].back();
        *log << "seed " << seed << " " << variants[v].name << ":";
        for (auto k : cfg.eval.ks) {
          *log << " R@" << k << "=" << std::fixed << std::setprecision(2) << rep.r_at_k.at(k)
               << " mR@" << k << "=" << rep.mr_at_k.at(k) << " F@" << k << "=" << rep.f_at_k.at(k);
        }
        *log << '\n';
      }
    }
  }
  std::vector<AblationRow> rows;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    AblationRow row;
    row.variant = variants[v].name;
    row.n_seeds = reports[v].size();
    for (auto k : cfg.eval.ks) {
      std::vector<double> r, mr, f;
      for (const auto& rep : reports[v]) {
        r.push_back(rep.r_at_k.at(k));
        mr.push_back(rep.mr_at_k.at(k));
        f.push_back(rep.f_at_k.at(k));
      }
      row.r[k] = summarize(r);
      row.mr[k] = summarize(mr);
      row.f[k] = summarize(f);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out) {
  out << "variant,n_seeds";
  if (rows.empty()) {
    out << '\n';
    return;
  }
  const auto& first = rows.front();
  for (const char* m : {"R", "mR", "F"}) {
    for (const auto& [k, s] : first.r) out << ',' << m << '@' << k << "_mean," << m << '@' << k << "_std";
  }
  out << '\n' << std::setprecision(10);
  for (const auto& row : rows) {
    out << row.variant << ',' << row.n_seeds;
    for (const auto* m : {&row.r, &row.mr, &row.f}) {
      for (const auto& [k, s] : *m) out << ',' << s.mean << ',' << s.std;
    }
    out << '\n';
  }
}

void export_embeddings(const ModelParameters<double>& params, const Dataset& data,
                       std::ostream& out) {
  const auto protos = make_prototypes(params);
  const auto o = params.config.proj_out;
  out << "kind,id,class";
  for (Eigen::Index i = 0; i < o; ++i) out << ",x" << i;
  out << '\n' << std::setprecision(17);
  auto coords = [&](const auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << v[i];
    out << '\n';
  };
  for (const auto& inst : data) {
    const auto fwd = forward(params, inst, protos);
    out << "instance," << inst.id << ',' << (inst.predicate ? *inst.predicate : -1);
    coords(fwd.r_bar());
  }
  for (Eigen::Index j = 0; j < protos->count(); ++j) {
    out << "prototype," << j << ',' << j;
    coords(protos->unit.col(j));
  }
}

}  // namespace rasgg
