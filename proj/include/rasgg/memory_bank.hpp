#ifndef RASGG_MEMORY_BANK_HPP_
#define RASGG_MEMORY_BANK_HPP_

#include "rasgg/encoder.hpp"
#include "rasgg/hash.hpp"
#include "rasgg/relation.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rasgg {

class BankError : public Error {
 public:
  explicit BankError(const std::string& what) : Error("bank", what) {}
};

using KeyMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BankEntry {
  Eigen::VectorXf key;
  std::uint16_t value = 0;
  TripletKey triplet;
  std::uint64_t source_id = 0;
};

struct Neighbor {
  std::size_t index = 0;  // entry index in the bank
  double score = 0.0;     // cosine similarity to the query
};

enum class BankSelection { kFirstInOrder, kSeededRandom };

struct BankBuildConfig {
  std::uint32_t cap = 10;
  BankSelection selection = BankSelection::kFirstInOrder;
  std::uint64_t seed = 0;  // used by kSeededRandom only
  unsigned threads = 1;
};

struct BankBuildStats {
  std::size_t scanned = 0;
  std::size_t skipped_background = 0;
  std::size_t skipped_zero_key = 0;
  std::size_t unique_triplets = 0;
};

/// Frozen store of (relation embedding, predicate) pairs with at most `cap`
/// entries per (subject class, predicate, object class) triplet. Retrieval is
/// an exact cosine scan.
class MemoryBank {
 public:
  MemoryBank() = default;

  /// Validates dimensions, finiteness and the per-triplet cap.
  static MemoryBank from_entries(Eigen::Index dim, std::uint32_t cap, const Digest& model_hash,
                                 const std::vector<BankEntry>& entries);

  static MemoryBank build(const ModelParameters<double>& pretrained, const Dataset& data,
                          const BankBuildConfig& cfg, BankBuildStats* stats = nullptr);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  Eigen::Index dim() const { return dim_; }
  std::uint32_t cap() const { return cap_; }
  const Digest& model_hash() const { return model_hash_; }

  BankEntry entry(std::size_t i) const;
  const KeyMatrix& keys() const { return keys_; }
  std::uint16_t value(std::size_t i) const { return values_[i]; }
  const TripletKey& triplet(std::size_t i) const { return triplets_[i]; }
  std::uint64_t source_id(std::size_t i) const { return source_ids_[i]; }
  /// Key i as double precision.
  VectorXd key(std::size_t i) const { return keys_.row(static_cast<Eigen::Index>(i)).transpose().cast<double>(); }

  /// Top-(k+1) entries by cosine similarity (descending, ties by ascending
  /// index) with the single best one dropped; min(k, M-1) results.
  std::vector<Neighbor> query(const VectorXd& q, std::size_t k) const;
  /// query() for every column of `queries` (dim x B).
  std::vector<std::vector<Neighbor>> query_batch(const MatrixXd& queries, std::size_t k) const;

 private:
  /// Exact top-(k+1) of one unit query, best match dropped. `coarse` holds
  /// single-precision scores (padded to whole blocks with -inf) and
  /// `block_max` their per-block maxima; both only prune, survivors are
  /// rescored in double.
  std::vector<Neighbor> search(const float* coarse, const float* block_max,
                               const Eigen::Ref<const VectorXd>& unit_query, std::size_t k) const;

  Eigen::Index dim_ = 0;
  std::uint32_t cap_ = 1;
  Digest model_hash_{};
  KeyMatrix keys_;          // M x dim, as stored on disk
  MatrixXd unit_keys_;      // dim x M, unit-normalized for scoring
  KeyMatrix coarse_keys_;   // M x dim, unit_keys_ in single precision, for pruning
  std::vector<std::uint16_t> values_;
  std::vector<TripletKey> triplets_;
  std::vector<std::uint64_t> source_ids_;
};

/// Binary layout (little-endian): magic "RABANK1", dim u32, count u64,
/// cap u32, model_hash 32 bytes, then count records of
/// {key dim x f32, value u16, triplet 3 x u16, source_id u64}.
void save_bank(const MemoryBank& bank, const std::filesystem::path& path);
MemoryBank load_bank(const std::filesystem::path& path);

}  // namespace rasgg

#endif  // RASGG_MEMORY_BANK_HPP_
