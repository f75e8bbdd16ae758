#include "rasgg/checkpoint.hpp"
#include "rasgg/trainer.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

using namespace rasgg;
using namespace rasgg::testing;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.gen.n_scenes = 60;
  c.gen.feature_dim = 16;
  c.model.embed_dim = 12;
  c.model.word_dim = 8;
  c.model.proj_hidden = 16;
  c.model.proj_out = 12;
  c.train.pretrain_epochs = 2;
  c.train.epochs = 1;
  c.eval.ks = {5, 20};
  return c;
}

struct Small {
  RunConfig cfg = small_config();
  Pipeline pipe = prepare_pipeline(cfg);
};

const Small& shared() {
  static const Small s;
  return s;
}

bool same_tensors(const ModelParameters<double>& a, const ModelParameters<double>& b) {
  const VectorXd fa = flatten(a), fb = flatten(b);
  return fa.size() == fb.size() && fa == fb;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("zero epochs leaves the initialization untouched") {
  const auto& s = shared();
  RunConfig c = s.cfg;
  c.train.pretrain_epochs = 0;
  const auto res = pretrain(c, s.pipe.vocab, s.pipe.train);
  const auto init = ModelParameters<double>::initialize(
      model_config_for(c, s.pipe.vocab, s.pipe.train.front().feature_dim()), c.seed);
  CHECK(same_tensors(res.params, init));
  CHECK(res.batches == 0);
  CHECK(res.epochs.empty());
}

TEST_CASE("training is deterministic in the seed") {
  const auto& s = shared();
  const auto a = pretrain(s.cfg, s.pipe.vocab, s.pipe.train);
  CHECK(to_hex(model_hash(a.params)) == to_hex(model_hash(s.pipe.pretrained)));
  RunConfig other = s.cfg;
  other.seed = 1;
  CHECK(to_hex(model_hash(pretrain(other, s.pipe.vocab, s.pipe.train).params)) !=
        to_hex(model_hash(a.params)));

  RunConfig ra = s.cfg;
  ra.aug.strategy = Strategy::kLabelAug;
  const auto x = train_ra(ra, s.pipe.pretrained, s.pipe.train, s.pipe.prop, &s.pipe.bank);
  const auto y = train_ra(ra, s.pipe.pretrained, s.pipe.train, s.pipe.prop, &s.pipe.bank);
  CHECK(same_tensors(x.params, y.params));
  CHECK(x.epochs[0].multi == y.epochs[0].multi);
}

TEST_CASE("strategy none ignores the bank and matches pretraining from a cold start") {
  const auto& s = shared();
  RunConfig c = s.cfg;
  c.aug.strategy = Strategy::kNone;
  const auto with_bank = train_ra(c, s.pipe.pretrained, s.pipe.train, s.pipe.prop, &s.pipe.bank);
  const auto without = train_ra(c, s.pipe.pretrained, s.pipe.train, s.pipe.prop, nullptr);
  CHECK(same_tensors(with_bank.params, without.params));
  CHECK(with_bank.epochs[0].multi == 0);
  CHECK(with_bank.epochs[0].selection_rate == 0.0);

  c.train.cold_start = true;
  c.train.epochs = c.train.pretrain_epochs;
  const auto cold = train_ra(c, s.pipe.pretrained, s.pipe.train, s.pipe.prop, nullptr);
  CHECK(same_tensors(cold.params, s.pipe.pretrained));
}

TEST_CASE("selection statistics") {
  const auto& s = shared();
  RunConfig c = s.cfg;
  c.aug.strategy = Strategy::kLabelAug;
  const auto full = train_ra(c, s.pipe.pretrained, s.pipe.train, s.pipe.prop, &s.pipe.bank);
  const auto& log = full.epochs.at(0);
  CHECK(log.epoch == c.train.pretrain_epochs);  // warm starts continue the epoch count
  CHECK(log.instances == s.pipe.train.size());
  CHECK(log.labeled == s.pipe.train.size());
  CHECK(log.selection_rate > 0.0);
  CHECK(log.selection_rate < 1.0);
  std::size_t hist = 0;
  for (auto h : log.aug_histogram) hist += h;
  CHECK(hist == log.multi);

  c.aug.use_selection = false;
  const auto all = train_ra(c, s.pipe.pretrained, s.pipe.train, s.pipe.prop, &s.pipe.bank);
  CHECK(all.epochs.at(0).multi == all.epochs.at(0).labeled);

  std::ostringstream csv;
  write_epoch_log_csv(full.epochs, csv);
  CHECK(csv.str().rfind("epoch,loss,", 0) == 0);
  CHECK(line_count(csv.str()) == 1 + full.epochs.size());
}

TEST_CASE("retrieval strategies need a bank") {
  const auto& s = shared();
  RunConfig c = s.cfg;
  c.aug.strategy = Strategy::kMixup;
  CHECK_THROWS_AS(train_ra(c, s.pipe.pretrained, s.pipe.train, s.pipe.prop, nullptr), TrainingError);
  const MemoryBank empty;
  CHECK_THROWS_AS(train_ra(c, s.pipe.pretrained, s.pipe.train, s.pipe.prop, &empty), TrainingError);
}

TEST_CASE("feature augmentation trains its MLP and retrieves at evaluation") {
  const auto& s = shared();
  RunConfig c = s.cfg;
  c.train.feat_aug_hidden = 8;
  const Variant v{"feat_aug", Strategy::kFeatAug, true, true};
  const auto r = run_variant(s.pipe, c, v);
  CHECK(r.training.params.has_feat_aug());
  CHECK(r.report.r_at_k.at(20) >= 0.0);
  CHECK_THROWS_AS(evaluate_model(r.training.params, s.pipe.test, s.pipe.grouping, c, nullptr), TrainingError);
}

TEST_CASE("variant definitions") {
  const auto ab = ablation_variants();
  REQUIRE(ab.size() == 4);
  CHECK(ab[0].name == "vanilla");
  CHECK(ab[0].strategy == Strategy::kNone);
  CHECK(ab[1].name == "wo_select");
  CHECK_FALSE(ab[1].use_selection);
  CHECK(ab[1].use_ips);
  CHECK(ab[2].name == "wo_ipss");
  CHECK(ab[2].use_selection);
  CHECK_FALSE(ab[2].use_ips);
  CHECK(ab[3].name == "full");
  CHECK(ab[3].strategy == Strategy::kLabelAug);
  const auto st = strategy_variants();
  REQUIRE(st.size() == 4);
  CHECK(st[1].strategy == Strategy::kFeatAug);
  CHECK(st[3].strategy == Strategy::kMixup);
}

TEST_CASE("summaries and the ablation table") {
  CHECK(summarize({}).mean == 0.0);
  CHECK(summarize({3.0}).std == 0.0);
  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));

  RunConfig c = small_config();
  c.ablate_seeds = {7};
  const auto rows = ablate(c, {ablation_variants()[0], ablation_variants()[3]});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_seeds == 1);
  CHECK(rows[0].r.at(20).std == 0.0);
  std::ostringstream csv;
  write_ablation_csv(rows, csv);
  CHECK(csv.str().rfind("variant,n_seeds,R@5_mean,R@5_std,R@20_mean", 0) == 0);
  CHECK(line_count(csv.str()) == 3);
  CHECK(csv.str().find("\nfull,1,") != std::string::npos);
}

TEST_CASE("embedding export") {
  const auto& s = shared();
  std::ostringstream out;
  export_embeddings(s.pipe.pretrained, s.pipe.test, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("kind,id,class,x0,", 0) == 0);
  std::size_t rows = 0, protos = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream fields(line);
    std::string kind, id, cls, x;
    std::getline(fields, kind, ',');
    std::getline(fields, id, ',');
    std::getline(fields, cls, ',');
    protos += kind == "prototype" ? 1 : 0;
    double sq = 0.0;
    int n = 0;
    while (std::getline(fields, x, ',')) {
      sq += std::stod(x) * std::stod(x);
      ++n;
    }
    CHECK(n == s.cfg.model.proj_out);
    CHECK(std::abs(sq - 1.0) <= 1e-9);
  }
  CHECK(rows == s.pipe.test.size() + s.pipe.vocab.n_p());
  CHECK(protos == s.pipe.vocab.n_p());
}

TEST_CASE("command-line errors are reported with a kind and exit code") {
  TempDir dir("cli");
  const std::string cli = RASGG_CLI_PATH;
  auto run = [&](const std::string& args) {
    const auto err = dir / "stderr.txt";
    const int status = std::system((cli + " " + args + " >/dev/null 2>" + err.string()).c_str());
    return std::pair{WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_bytes(err)};
  };
  const auto [usage_code, usage_err] = run("");
  CHECK(usage_code == 2);
  CHECK(usage_err.rfind("error: kind=usage message=\"", 0) == 0);

  write_bytes(dir / "bad.toml", "[aug]\nkk = 1\n");
  const auto [cfg_code, cfg_err] = run("--config " + (dir / "bad.toml").string() + " --out " +
                                       dir.path().string() + " gen-data");
  CHECK(cfg_code == 1);
  CHECK(cfg_err.find("kind=config") != std::string::npos);
  CHECK(cfg_err.find("aug.kk") != std::string::npos);

  const auto [miss_code, miss_err] = run("--out " + (dir / "nothing").string() + " eval");
  CHECK(miss_code == 1);
  CHECK(miss_err.rfind("error: kind=", 0) == 0);
}
