#ifndef RASGG_SYNTH_HPP_
#define RASGG_SYNTH_HPP_

#include "rasgg/relation.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>

namespace rasgg {

/// Long-tailed relation data with planted latent label sets.
///
/// Each cluster owns one general predicate and `fine_per_cluster` fine ones.
/// Every instance's latent set holds its cluster's general predicate and,
/// with probability `multi_prob`, one or two fine predicates; features are
/// the cluster centroid plus the mean offset of those fine predicates plus
/// Gaussian noise. The single observed label is drawn from the latent set
/// proportionally to a global Zipf popularity in which general predicates
/// rank first, so annotation is biased toward head classes.
struct GeneratorConfig {
  int n_clusters = 6;
  int fine_per_cluster = 3;
  double zipf_s = 1.5;
  int n_scenes = 800;
  int relations_per_scene = 12;
  double noise_std = 0.15;
  double multi_prob = 0.5;
  std::uint64_t seed = 0;

  int feature_dim = 64;
  int entities_per_cluster = 3;
  double second_fine_prob = 0.3;  // chance a multi-label set gets a second fine predicate
  double centroid_scale = 1.0;    // expected norm of cluster centroids
  double fine_offset_scale = 3.0;
  double entity_offset_scale = 0.4;
  double background_frac = 0.0;   // fraction of unlabeled (background) pairs

  void validate() const;
  int n_predicates() const { return n_clusters * (1 + fine_per_cluster); }
};

struct SyntheticData {
  Vocabulary vocab;
  Dataset data;
  VectorXd popularity;       // normalized Zipf popularity per predicate
  VectorXd true_propensity;  // P(observed = i | i in latent), empirical over the data
  MatrixXd union_centroids;  // feature_dim x n_clusters
};

SyntheticData generate(const GeneratorConfig& cfg);

/// Splits by scene: the last `test_frac` of scene ids go to the test set.
std::pair<Dataset, Dataset> split_by_scene(const Dataset& data, double test_frac);

struct ObservationBiasReport {
  VectorXd latent_marginal;  // share of latent memberships per class
  VectorXd observed;         // share of observed labels per class
  double total_variation = 0.0;
};

/// Compares the latent label marginal with the observed label frequencies.
/// Background relations are ignored; labeled instances without latent sets
/// are an error.
ObservationBiasReport observation_bias_report(const Dataset& data, std::size_t n_p);

/// Sidecar JSON with the generator's per-class popularity, true propensity
/// and latent marginal.
void save_generator_sidecar(const SyntheticData& syn, const std::filesystem::path& path);

}  // namespace rasgg

#endif  // RASGG_SYNTH_HPP_
