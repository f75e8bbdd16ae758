// Command-line driver for the retrieval-augmented scene graph pipeline.

#include "rasgg/checkpoint.hpp"
#include "rasgg/config.hpp"
#include "rasgg/hash.hpp"
#include "rasgg/memory_bank.hpp"
#include "rasgg/metrics.hpp"
#include "rasgg/synth.hpp"
#include "rasgg/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace rasgg;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  fs::path out = "run";
  fs::path data;        // directory with train.jsonl / test.jsonl / vocab.json
  fs::path checkpoint;
  fs::path bank;
  std::string split = "test";
  std::string variants = "ablation";
  std::vector<std::uint64_t> seeds;
  bool force = false;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.seeds.empty()) cfg.ablate_seeds = o.seeds;
  cfg.validate();
  return cfg;
}

fs::path data_dir(const Options& o) { return o.data.empty() ? o.out : o.data; }

Vocabulary load_vocab(const Options& o) { return load_vocabulary(data_dir(o) / "vocab.json"); }

std::string vocab_hash(const Vocabulary& v) { return to_hex(sha256(v.canonical_json())); }

Dataset load_split(const Options& o, const Vocabulary& vocab, const std::string& split) {
  if (split != "train" && split != "test") throw Error("usage", "split must be train or test");
  return load_dataset(data_dir(o) / (split + ".jsonl"), vocab);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << text;
}

Checkpoint load_model(const Options& o, const fs::path& fallback, const Vocabulary& vocab) {
  const fs::path path = o.checkpoint.empty() ? o.out / fallback : o.checkpoint;
  if (o.force) return load_checkpoint(path);
  return load_checkpoint(path, vocab_hash(vocab));
}

void save_model(const fs::path& path, const ModelParameters<double>& params,
                const Vocabulary& vocab, const RunConfig& cfg) {
  Checkpoint ck;
  ck.params = params;
  ck.vocab_hash = vocab_hash(vocab);
  ck.config_hash = config_hash(cfg);
  save_checkpoint(ck, path);
}

void cmd_gen_data(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const auto syn = generate(cfg.generator());
  const auto [train, test] = split_by_scene(syn.data, cfg.test_frac);
  fs::create_directories(o.out);
  save_dataset(train, o.out / "train.jsonl");
  save_dataset(test, o.out / "test.jsonl");
  save_vocabulary(syn.vocab, o.out / "vocab.json");
  save_generator_sidecar(syn, o.out / "generator.json");
  const auto bias = observation_bias_report(syn.data, syn.vocab.n_p());
  std::cout << "wrote " << train.size() << " train / " << test.size() << " test relations, "
            << syn.vocab.n_p() << " predicates, observation TV distance "
            << bias.total_variation << " (config " << config_hash(cfg) << ")\n";
}

void cmd_pretrain(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const auto vocab = load_vocab(o);
  const auto train = load_split(o, vocab, "train");
  fs::create_directories(o.out);
  const auto res = pretrain(cfg, vocab, train, &std::cout, o.out);
  save_model(o.out / "pretrained.ckpt.json", res.params, vocab, cfg);
  std::ofstream log(o.out / "pretrain_log.csv");
  write_epoch_log_csv(res.epochs, log);
  std::cout << "pretrained " << res.epochs.size() << " epochs, "
            << res.seconds_per_100_batches() << " s per 100 batches\n";
}

void cmd_build_bank(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const auto vocab = load_vocab(o);
  const auto train = load_split(o, vocab, "train");
  const auto ck = load_model(o, "pretrained.ckpt.json", vocab);
  BankBuildConfig bc = cfg.bank;
  bc.seed = cfg.seed;
  bc.threads = cfg.train.threads;
  BankBuildStats st;
  const auto bank = MemoryBank::build(ck.params, train, bc, &st);
  fs::create_directories(o.out);
  const fs::path path = o.bank.empty() ? o.out / "bank.rab" : o.bank;
  save_bank(bank, path);
  std::cout << "bank: " << bank.size() << " entries over " << st.unique_triplets
            << " triplets (cap " << bank.cap() << ", " << st.skipped_background
            << " background skipped) -> " << path.string() << '\n';
}

void cmd_train(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const auto vocab = load_vocab(o);
  const auto train = load_split(o, vocab, "train");
  const auto ck = load_model(o, "pretrained.ckpt.json", vocab);
  const auto prop = compute_propensity(train, vocab.n_p());
  std::optional<MemoryBank> bank;
  const fs::path bank_path = o.bank.empty() ? o.out / "bank.rab" : o.bank;
  if (cfg.aug.strategy != Strategy::kNone || fs::exists(bank_path)) {
    bank = load_bank(bank_path);
    if (to_hex(bank->model_hash()) != ck.model_hash) {
      std::cerr << "warning: bank was built from a different model than the starting checkpoint\n";
    }
  }
  fs::create_directories(o.out);
  const auto res = train_ra(cfg, ck.params, train, prop, bank ? &*bank : nullptr, &std::cout, o.out);
  save_model(o.out / "ra.ckpt.json", res.params, vocab, cfg);
  std::ofstream log(o.out / "train_log.csv");
  write_epoch_log_csv(res.epochs, log);
  std::cout << "trained " << res.epochs.size() << " epochs with strategy "
            << strategy_name(cfg.aug.strategy) << ", " << res.seconds_per_100_batches()
            << " s per 100 batches\n";
}

void cmd_eval(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const auto vocab = load_vocab(o);
  const auto train = load_split(o, vocab, "train");
  const auto data = load_split(o, vocab, o.split);
  const auto ck = load_model(o, "ra.ckpt.json", vocab);
  const auto grouping =
      group_classes(compute_propensity(train, vocab.n_p()).frequency, cfg.eval.grouping);
  std::optional<MemoryBank> bank;
  if (ck.params.has_feat_aug()) bank = load_bank(o.bank.empty() ? o.out / "bank.rab" : o.bank);
  const auto report = evaluate_model(ck.params, data, grouping, cfg, bank ? &*bank : nullptr);
  fs::create_directories(o.out);
  std::ofstream csv(o.out / "report.csv");
  write_report_csv(report, vocab.predicates, csv);
  auto j = nlohmann::ordered_json::parse(report_json(report, vocab.predicates));
  j["model_hash"] = ck.model_hash;
  j["vocab_hash"] = ck.vocab_hash;
  j["config_hash"] = config_hash(cfg);
  write_text(o.out / "report.json", j.dump(2) + "\n");
  print_report_table(report, std::cout);
}

void cmd_ablate(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  std::vector<Variant> variants;
  if (o.variants == "ablation") {
    variants = ablation_variants();
  } else if (o.variants == "strategies") {
    variants = strategy_variants();
  } else {
    for (const auto& v : ablation_variants()) {
      if (v.name == o.variants) variants.push_back(v);
    }
    for (const auto& v : strategy_variants()) {
      if (v.name == o.variants && variants.empty()) variants.push_back(v);
    }
    if (variants.empty()) throw Error("usage", "unknown variant set '" + o.variants + "'");
  }
  const auto rows = ablate(cfg, variants, &std::cout);
  fs::create_directories(o.out);
  std::ofstream out(o.out / "ablation.csv");
  write_ablation_csv(rows, out);
  write_ablation_csv(rows, std::cout);
}

void cmd_export(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const auto vocab = load_vocab(o);
  const auto data = load_split(o, vocab, o.split);
  const auto ck = load_model(o, "ra.ckpt.json", vocab);
  fs::create_directories(o.out);
  std::ofstream out(o.out / "embeddings.csv");
  export_embeddings(ck.params, data, out);
  std::cout << "exported " << data.size() << " instances and " << vocab.n_p()
            << " prototypes (config " << config_hash(cfg) << ")\n";
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += (c == '\n' ? ' ' : c);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented predicate classification on relation features"};
  app.require_subcommand(1);
  Options o;
  std::string out_dir = o.out.string();
  app.add_option("--config", o.config_path, "TOML run configuration");
  app.add_option("--seed", o.seed, "Run seed (overrides the config)");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();

  auto with_inputs = [&](CLI::App* sub) {
    sub->add_option("--data", o.data, "Directory with train/test JSONL and vocab.json (default: --out)");
    sub->add_option("--checkpoint", o.checkpoint, "Checkpoint to start from");
    sub->add_option("--bank", o.bank, "Memory bank file");
    sub->add_flag("--force", o.force, "Accept a checkpoint built for a different vocabulary");
    return sub;
  };
  std::vector<std::pair<CLI::App*, void (*)(const Options&)>> cmds;
  cmds.emplace_back(app.add_subcommand("gen-data", "Generate the synthetic benchmark"), cmd_gen_data);
  cmds.emplace_back(with_inputs(app.add_subcommand("pretrain", "Vanilla prototype training")), cmd_pretrain);
  cmds.emplace_back(with_inputs(app.add_subcommand("build-bank", "Build the memory bank")), cmd_build_bank);
  cmds.emplace_back(with_inputs(app.add_subcommand("train", "Retrieval-augmented training")), cmd_train);
  auto* eval = with_inputs(app.add_subcommand("eval", "Evaluate a checkpoint"));
  eval->add_option("--split", o.split, "train or test")->capture_default_str();
  cmds.emplace_back(eval, cmd_eval);
  auto* abl = app.add_subcommand("ablate", "Run variants over seeds");
  abl->add_option("--seeds", o.seeds, "Seeds (overrides ablate.seeds)");
  abl->add_option("--variants", o.variants, "ablation, strategies, or one variant name")
      ->capture_default_str();
  cmds.emplace_back(abl, cmd_ablate);
  auto* exp = with_inputs(app.add_subcommand("export-embeddings", "Export unit embeddings"));
  exp->add_option("--split", o.split, "train or test")->capture_default_str();
  cmds.emplace_back(exp, cmd_export);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: kind=usage message=\"" << escape(e.what()) << "\"\n";
    return 2;
  }
  o.out = out_dir;
  try {
    for (auto& [sub, fn] : cmds) {
      if (sub->parsed()) fn(o);
    }
  } catch (const Error& e) {
    std::cerr << "error: kind=" << e.kind() << " message=\"" << escape(e.what()) << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=internal message=\"" << escape(e.what()) << "\"\n";
    return 1;
  }
  return 0;
}
