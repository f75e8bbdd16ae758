#include "rasgg/synth.hpp"

#include "rasgg/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rasgg {

void GeneratorConfig::validate() const {
  if (n_clusters < 1) throw DatasetError("gen.n_clusters must be >= 1");
  if (fine_per_cluster < 1) throw DatasetError("gen.fine_per_cluster must be >= 1");
  if (zipf_s < 0.0) throw DatasetError("gen.zipf_s must be >= 0");
  if (!(multi_prob >= 0.0 && multi_prob <= 1.0)) throw DatasetError("gen.multi_prob must lie in [0,1]");
  if (n_scenes < 1 || relations_per_scene < 1) throw DatasetError("gen: empty dataset shape");
  if (!(noise_std >= 0.0)) throw DatasetError("gen.noise_std must be >= 0");
  if (feature_dim < 1 || entities_per_cluster < 1) throw DatasetError("gen: bad dimensions");
  if (!(background_frac >= 0.0 && background_frac < 1.0)) {
    throw DatasetError("gen.background_frac must lie in [0,1)");
  }
  if (!(second_fine_prob >= 0.0 && second_fine_prob <= 1.0)) {
    throw DatasetError("gen.second_fine_prob must lie in [0,1]");
  }
}

namespace {

MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Centroids with expected norm `scale`, redrawn until every pair is at
/// least `min_sep` apart.
MatrixXd separated_centroids(Eigen::Index dim, int k, double scale, double min_sep,
                             std::mt19937_64& rng) {
  const double std = scale / std::sqrt(static_cast<double>(dim));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    MatrixXd c = gaussian_matrix(dim, k, std, rng);
    bool ok = true;
    for (int a = 0; a < k && ok; ++a) {
      for (int b = a + 1; b < k && ok; ++b) ok = (c.col(a) - c.col(b)).norm() >= min_sep;
    }
    if (ok) return c;
  }
  throw DatasetError("could not place separated cluster centroids; lower noise_std");
}

}  // namespace

SyntheticData generate(const GeneratorConfig& cfg) {
  cfg.validate();
  const int C = cfg.n_clusters;
  const int F = cfg.fine_per_cluster;
  const int n_p = cfg.n_predicates();
  const Eigen::Index dim = cfg.feature_dim;
  auto general_of = [&](int c) { return c; };
  auto fine_of = [&](int c, int j) { return C + c * F + j; };

  SyntheticData syn;
  std::vector<std::string> pred_names(static_cast<std::size_t>(n_p));
  for (int c = 0; c < C; ++c) {
    pred_names[static_cast<std::size_t>(general_of(c))] = "c" + std::to_string(c) + "_general";
    for (int j = 0; j < F; ++j) {
      pred_names[static_cast<std::size_t>(fine_of(c, j))] =
          "c" + std::to_string(c) + "_fine" + std::to_string(j);
    }
  }
  syn.vocab.predicates = PredicateVocabulary(std::move(pred_names));
  for (int c = 0; c < C; ++c) {
    for (int e = 0; e < cfg.entities_per_cluster; ++e) {
      syn.vocab.entities.push_back("c" + std::to_string(c) + "_entity" + std::to_string(e));
    }
  }

  // Popularity follows the class index: general predicates are the head.
  syn.popularity.resize(n_p);
  for (int i = 0; i < n_p; ++i) syn.popularity[i] = std::pow(static_cast<double>(i + 1), -cfg.zipf_s);
  syn.popularity /= syn.popularity.sum();

  auto geo = make_stream(cfg.seed, "gen-geometry");
  const double min_sep = 4.0 * cfg.noise_std;
  const MatrixXd mu_s = separated_centroids(dim, C, cfg.centroid_scale, min_sep, geo);
  const MatrixXd mu_o = separated_centroids(dim, C, cfg.centroid_scale, min_sep, geo);
  syn.union_centroids = separated_centroids(dim, C, cfg.centroid_scale, min_sep, geo);
  const double off_std = cfg.fine_offset_scale / std::sqrt(static_cast<double>(dim));
  const MatrixXd off_s = gaussian_matrix(dim, n_p, off_std, geo);
  const MatrixXd off_o = gaussian_matrix(dim, n_p, off_std, geo);
  const MatrixXd off_u = gaussian_matrix(dim, n_p, off_std, geo);
  const auto n_e = static_cast<Eigen::Index>(syn.vocab.n_entities());
  const double ent_std = cfg.entity_offset_scale / std::sqrt(static_cast<double>(dim));
  const MatrixXd ent_s = gaussian_matrix(dim, n_e, ent_std, geo);
  const MatrixXd ent_o = gaussian_matrix(dim, n_e, ent_std, geo);

  auto rng = make_stream(cfg.seed, "gen-instances");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> pick_cluster(0, C - 1);
  std::uniform_int_distribution<int> pick_fine(0, F - 1);
  std::uniform_int_distribution<int> pick_entity(0, cfg.entities_per_cluster - 1);
  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  auto noisy = [&](VectorXd v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += noise(rng);
    return v;
  };

  std::int64_t next_id = 0;
  for (int s = 0; s < cfg.n_scenes; ++s) {
    for (int r = 0; r < cfg.relations_per_scene; ++r) {
      RelationInstance inst;
      inst.id = next_id++;
      inst.scene_id = s;
      const int c = pick_cluster(rng);
      inst.subj_class = c * cfg.entities_per_cluster + pick_entity(rng);
      inst.obj_class = c * cfg.entities_per_cluster + pick_entity(rng);
      const bool background = u01(rng) < cfg.background_frac;

      std::vector<int> latent{general_of(c)};
      if (!background && u01(rng) < cfg.multi_prob) {
        const int first = pick_fine(rng);
        latent.push_back(fine_of(c, first));
        if (F > 1 && u01(rng) < cfg.second_fine_prob) {
          int second = pick_fine(rng);
          while (second == first) second = pick_fine(rng);
          latent.push_back(fine_of(c, second));
        }
      }
      VectorXd fs = mu_s.col(c) + ent_s.col(inst.subj_class);
      VectorXd fo = mu_o.col(c) + ent_o.col(inst.obj_class);
      VectorXd fu = syn.union_centroids.col(c);
      if (latent.size() > 1) {
        const double w = 1.0 / static_cast<double>(latent.size() - 1);
        for (std::size_t k = 1; k < latent.size(); ++k) {
          fs += w * off_s.col(latent[k]);
          fo += w * off_o.col(latent[k]);
          fu += w * off_u.col(latent[k]);
        }
      }
      inst.subj_feat = noisy(std::move(fs));
      inst.obj_feat = noisy(std::move(fo));
      inst.union_feat = noisy(std::move(fu));

      if (background) {
        inst.latent = std::vector<int>{};
      } else {
        VectorXd w(static_cast<Eigen::Index>(latent.size()));
        for (std::size_t k = 0; k < latent.size(); ++k) {
          w[static_cast<Eigen::Index>(k)] = syn.popularity[latent[k]];
        }
        inst.predicate = latent[sample_categorical(w, rng)];
        std::sort(latent.begin(), latent.end());
        inst.latent = std::move(latent);
      }
      syn.data.push_back(std::move(inst));
    }
  }

  // Empirical P(observed = i | i in latent) under the popularity rule.
  VectorXd num = VectorXd::Zero(n_p);
  VectorXd den = VectorXd::Zero(n_p);
  for (const auto& inst : syn.data) {
    if (inst.is_background()) continue;
    double z = 0.0;
    for (int k : *inst.latent) z += syn.popularity[k];
    for (int k : *inst.latent) {
      num[k] += syn.popularity[k] / z;
      den[k] += 1.0;
    }
  }
  syn.true_propensity = num.binaryExpr(den, [](double a, double b) { return b > 0 ? a / b : 0.0; });
  return syn;
}

std::pair<Dataset, Dataset> split_by_scene(const Dataset& data, double test_frac) {
  if (!(test_frac >= 0.0 && test_frac < 1.0)) throw DatasetError("test fraction must lie in [0,1)");
  std::int64_t max_scene = -1;
  for (const auto& inst : data) max_scene = std::max(max_scene, inst.scene_id);
  const auto n_scenes = max_scene + 1;
  const auto first_test =
      n_scenes - static_cast<std::int64_t>(std::llround(test_frac * static_cast<double>(n_scenes)));
  std::pair<Dataset, Dataset> out;
  for (const auto& inst : data) {
    (inst.scene_id < first_test ? out.first : out.second).push_back(inst);
  }
  return out;
}

ObservationBiasReport observation_bias_report(const Dataset& data, std::size_t n_p) {
  const auto n = static_cast<Eigen::Index>(n_p);
  ObservationBiasReport rep;
  rep.latent_marginal = VectorXd::Zero(n);
  rep.observed = VectorXd::Zero(n);
  std::size_t labeled = 0;
  for (const auto& inst : data) {
    if (inst.is_background()) continue;
    if (!inst.latent) {
      throw DatasetError("instance " + std::to_string(inst.id) + " has no latent label set");
    }
    for (int k : *inst.latent) rep.latent_marginal[k] += 1.0;
    rep.observed[*inst.predicate] += 1.0;
    ++labeled;
  }
  if (labeled == 0) throw DatasetError("observation bias report needs labeled instances");
  rep.latent_marginal /= rep.latent_marginal.sum();
  rep.observed /= rep.observed.sum();
  rep.total_variation = 0.5 * (rep.latent_marginal - rep.observed).cwiseAbs().sum();
  return rep;
}

void save_generator_sidecar(const SyntheticData& syn, const std::filesystem::path& path) {
  auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  const auto bias = observation_bias_report(syn.data, syn.vocab.n_p());
  nlohmann::json j;
  j["predicates"] = syn.vocab.predicates.names();
  j["popularity"] = vec(syn.popularity);
  j["true_propensity"] = vec(syn.true_propensity);
  j["latent_marginal"] = vec(bias.latent_marginal);
  j["observed_frequency"] = vec(bias.observed);
  j["total_variation"] = bias.total_variation;
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write sidecar " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace rasgg
