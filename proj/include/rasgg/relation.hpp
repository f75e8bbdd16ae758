#ifndef RASGG_RELATION_HPP_
#define RASGG_RELATION_HPP_

#include "rasgg/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rasgg {

class DatasetError : public Error {
 public:
  explicit DatasetError(const std::string& what) : Error("dataset", what) {}
};

/// Predicate class names. Index order is the class index used everywhere.
class PredicateVocabulary {
 public:
  PredicateVocabulary() = default;
  explicit PredicateVocabulary(std::vector<std::string> names);

  std::size_t n_p() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }

 private:
  std::vector<std::string> names_;
};

struct Vocabulary {
  PredicateVocabulary predicates;
  std::vector<std::string> entities;

  std::size_t n_p() const { return predicates.n_p(); }
  std::size_t n_entities() const { return entities.size(); }
  /// Canonical JSON text; the vocabulary hash is computed over these bytes.
  std::string canonical_json() const;
};

Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);

/// Nonnegative weights over predicate classes. An all-zero vector is a
/// background (unlabeled) relation; otherwise the weights sum to one.
class LabelDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  LabelDistribution() = default;
  explicit LabelDistribution(VectorXd weights);

  static LabelDistribution empty(std::size_t n_p);
  static LabelDistribution one_hot(std::size_t n_p, std::size_t index);
  /// lambda * onehot(first) + (1 - lambda) * onehot(second).
  static LabelDistribution mix(std::size_t n_p, std::size_t first,
                               std::size_t second, double lambda);

  const VectorXd& weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  double sum() const { return weights_.sum(); }
  bool is_empty() const { return weights_.isZero(0.0); }
  bool is_one_hot() const;
  /// Index of the single hot entry; throws unless is_one_hot().
  std::size_t hot_index() const;

 private:
  VectorXd weights_;
};

struct RelationInstance {
  std::int64_t id = 0;
  std::int64_t scene_id = 0;
  int subj_class = 0;
  int obj_class = 0;
  VectorXd subj_feat;
  VectorXd obj_feat;
  VectorXd union_feat;
  /// Observed single annotation; nullopt for a background relation.
  std::optional<int> predicate;
  /// Planted latent label set (synthetic data only).
  std::optional<std::vector<int>> latent;

  bool is_background() const { return !predicate.has_value(); }
  Eigen::Index feature_dim() const { return subj_feat.size(); }
  LabelDistribution observed(std::size_t n_p) const;
};

using Dataset = std::vector<RelationInstance>;

struct TripletKey {
  int subj_class = 0;
  int predicate = 0;
  int obj_class = 0;

  friend auto operator<=>(const TripletKey&, const TripletKey&) = default;
};

/// Reads the JSON Lines dataset format. Class indices are checked against
/// `vocab`; feature dimensions must agree across the whole file.
Dataset load_dataset(const std::filesystem::path& path, const Vocabulary& vocab);
Dataset parse_dataset(std::istream& in, const Vocabulary& vocab);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
void write_dataset(const Dataset& data, std::ostream& out);

/// Throws DatasetError naming the offending instance id.
void validate_instance(const RelationInstance& inst, Eigen::Index feature_dim,
                       const Vocabulary* vocab = nullptr);

struct PropensityTable {
  static constexpr double kEpsilon = 1e-8;

  VectorXd frequency;
  VectorXd inverse;

  std::size_t n_p() const { return static_cast<std::size_t>(frequency.size()); }
  /// Table with the given class frequencies and epsilon-clamped inverses.
  static PropensityTable from_frequency(VectorXd frequency);
};

/// Class frequencies over labeled instances; background relations are ignored.
PropensityTable compute_propensity(const Dataset& data, std::size_t n_p);

/// Head/body/tail partition of classes sorted by descending frequency
/// (ties by ascending class index). order[0, head_end) is head,
/// order[tail_begin, n) is tail.
struct ClassGrouping {
  enum class Group { kHead, kBody, kTail };

  std::vector<std::size_t> order;
  std::size_t head_end = 0;
  std::size_t tail_begin = 0;

  std::vector<Group> group_of_class() const;
};

struct GroupingConfig {
  double head_frac = 0.5;
  double tail_frac = 0.1;
};

ClassGrouping group_classes(const VectorXd& frequency,
                            const GroupingConfig& cfg = {});

}  // namespace rasgg

#endif  // RASGG_RELATION_HPP_
