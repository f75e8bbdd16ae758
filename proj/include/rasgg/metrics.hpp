#ifndef RASGG_METRICS_HPP_
#define RASGG_METRICS_HPP_

#include "rasgg/encoder.hpp"
#include "rasgg/relation.hpp"

#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace rasgg {

class EvalError : public Error {
 public:
  explicit EvalError(const std::string& what) : Error("eval", what) {}
};

/// One predicted triplet for a subject-object pair. With ground-truth boxes
/// the pair id identifies (subject, object); a prediction matches a GT
/// triplet when pair id and predicate agree.
struct ScoredTriplet {
  std::int64_t pair_id = 0;
  std::size_t predicate = 0;
  double score = 0.0;
};

struct GtTriplet {
  std::int64_t pair_id = 0;
  std::size_t predicate = 0;
};

struct Scene {
  std::vector<ScoredTriplet> predictions;
  std::vector<GtTriplet> gt;
};

/// Integer hit/total counts per class at one K.
struct MatchCounts {
  std::vector<std::size_t> hits;
  std::vector<std::size_t> totals;

  std::size_t total_hits() const;
  std::size_t total_gt() const;
};

/// Ranks each scene's predictions by descending score (ties by ascending
/// pair id), keeps the top k and counts matched GT triplets per class.
MatchCounts match_counts(std::span<const Scene> scenes, std::size_t k, std::size_t n_p);

/// Total matches / total GT over all scenes, as a fraction.
double recall_at_k(std::span<const Scene> scenes, std::size_t k, std::size_t n_p);

/// Unweighted mean of per-class recall over classes with at least one GT.
double mean_recall_at_k(std::span<const Scene> scenes, std::size_t k, std::size_t n_p);

/// Harmonic mean 2 r m / (r + m); zero when both are zero. Works on
/// fractions and percentages alike.
double f_at_k(double r, double mr);

struct GroupRecall {
  std::optional<double> head, body, tail;  // nullopt: no class of the group has GT
};

/// All values are percentages.
struct EvalReport {
  std::map<std::size_t, double> r_at_k;
  std::map<std::size_t, double> mr_at_k;
  std::map<std::size_t, double> f_at_k;
  std::map<std::size_t, std::vector<std::optional<double>>> per_class_recall;
  std::map<std::size_t, GroupRecall> group_recall;
  std::size_t n_scenes = 0;
  std::size_t n_gt = 0;
};

/// Builds the report from scenes. `grouping` partitions classes into
/// head/body/tail for the group aggregates.
EvalReport make_report(std::span<const Scene> scenes, std::span<const std::size_t> ks,
                       std::size_t n_p, const ClassGrouping& grouping);

/// Predicted class and triplet score for one instance.
using Predictor = std::function<std::pair<std::size_t, double>(const RelationInstance&)>;

/// Groups labeled instances by scene (ascending scene id) with one
/// prediction per pair. Background pairs have no GT and are left out.
std::vector<Scene> build_scenes(const Dataset& data, const Predictor& predictor,
                                unsigned threads = 1);

/// Predicted class and max softmax probability under the model.
std::pair<std::size_t, double> predict_with_score(const ModelParameters<double>& params,
                                                  const RelationInstance& inst,
                                                  const std::shared_ptr<const PrototypeSet<double>>& protos);

/// PredCls evaluation of a model: argmax predicate per labeled pair, scored
/// by its softmax probability.
EvalReport evaluate(const ModelParameters<double>& params, const Dataset& data,
                    std::span<const std::size_t> ks, const ClassGrouping& grouping,
                    unsigned threads = 1);

/// `metric,K,value` rows: R, mR, F, head/body/tail mean recall and per-class
/// recall (`recall:<class name>`).
void write_report_csv(const EvalReport& report, const PredicateVocabulary& names,
                      std::ostream& out);
void print_report_table(const EvalReport& report, std::ostream& out);
std::string report_json(const EvalReport& report, const PredicateVocabulary& names);

}  // namespace rasgg

#endif  // RASGG_METRICS_HPP_
