#include "rasgg/memory_bank.hpp"

#include "rasgg/checkpoint.hpp"
#include "rasgg/rng.hpp"
#include "score_kernel.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

namespace rasgg {

namespace {

constexpr char kMagic[7] = {'R', 'A', 'B', 'A', 'N', 'K', '1'};
constexpr std::size_t kHeaderSize = 7 + 4 + 8 + 4 + 32;
constexpr Eigen::Index kBlock = 8;  // scores per pruning block

Eigen::Index padded(Eigen::Index m) { return (m + kBlock - 1) / kBlock * kBlock; }

std::size_t record_size(Eigen::Index dim) {
  return static_cast<std::size_t>(dim) * 4 + 2 + 3 * 2 + 8;
}

template <typename T>
void put_le(std::vector<char>& buf, T v) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const char* p) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return static_cast<T>(u);
}

std::uint16_t to_u16(int v, const char* what) {
  if (v < 0 || v > std::numeric_limits<std::uint16_t>::max()) {
    throw BankError(std::string(what) + " does not fit in 16 bits");
  }
  return static_cast<std::uint16_t>(v);
}

}  // namespace

MemoryBank MemoryBank::from_entries(Eigen::Index dim, std::uint32_t cap, const Digest& model_hash,
                                    const std::vector<BankEntry>& entries) {
  if (dim < 1) throw BankError("bank dimension must be >= 1");
  if (cap < 1) throw BankError("bank cap must be >= 1");
  MemoryBank b;
  b.dim_ = dim;
  b.cap_ = cap;
  b.model_hash_ = model_hash;
  const auto m = static_cast<Eigen::Index>(entries.size());
  b.keys_.resize(m, dim);
  b.unit_keys_.resize(dim, m);
  std::map<TripletKey, std::uint32_t> per_triplet;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& e = entries[static_cast<std::size_t>(i)];
    if (e.key.size() != dim) throw BankError("bank entry key has the wrong dimension");
    if (!e.key.allFinite()) throw BankError("bank entry key is not finite");
    const VectorXd k = e.key.cast<double>();
    const double n = k.norm();
    if (!(n > 0.0)) throw BankError("bank entry key is zero");
    if (++per_triplet[e.triplet] > cap) throw BankError("per-triplet cap exceeded");
    b.keys_.row(i) = e.key.transpose();
    b.unit_keys_.col(i) = k / n;
    b.values_.push_back(e.value);
    b.triplets_.push_back(e.triplet);
    b.source_ids_.push_back(e.source_id);
  }
  b.coarse_keys_ = b.unit_keys_.transpose().cast<float>();
  return b;
}

MemoryBank MemoryBank::build(const ModelParameters<double>& pretrained, const Dataset& data,
                             const BankBuildConfig& cfg, BankBuildStats* stats) {
  if (cfg.cap < 1) throw BankError("bank cap must be >= 1");
  BankBuildStats st;
  st.scanned = data.size();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (cfg.selection == BankSelection::kSeededRandom) {
    auto rng = make_stream(cfg.seed, "bank-select");
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::map<TripletKey, std::uint32_t> taken;
  std::vector<std::size_t> chosen;
  for (std::size_t idx : order) {
    const auto& inst = data[idx];
    if (inst.is_background()) {
      ++st.skipped_background;
      continue;
    }
    const TripletKey t{inst.subj_class, *inst.predicate, inst.obj_class};
    auto& n = taken[t];
    if (n < cfg.cap) {
      ++n;
      chosen.push_back(idx);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  st.unique_triplets = taken.size();

  Dataset subset;
  subset.reserve(chosen.size());
  for (std::size_t idx : chosen) subset.push_back(data[idx]);
  const auto embeddings = batch_embed(pretrained, subset, cfg.threads);

  std::vector<BankEntry> entries;
  entries.reserve(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const auto& inst = subset[i];
    BankEntry e;
    e.key = embeddings[i].second.cast<float>();
    if (!(e.key.cast<double>().norm() > 0.0) || !e.key.allFinite()) {
      ++st.skipped_zero_key;
      continue;
    }
    e.value = to_u16(*inst.predicate, "predicate");
    e.triplet = {inst.subj_class, *inst.predicate, inst.obj_class};
    to_u16(inst.subj_class, "entity class");
    to_u16(inst.obj_class, "entity class");
    e.source_id = static_cast<std::uint64_t>(inst.id);
    entries.push_back(std::move(e));
  }
  if (stats != nullptr) *stats = st;
  return from_entries(pretrained.config.embed_dim, cfg.cap, rasgg::model_hash(pretrained), entries);
}

BankEntry MemoryBank::entry(std::size_t i) const {
  BankEntry e;
  e.key = keys_.row(static_cast<Eigen::Index>(i)).transpose();
  e.value = values_.at(i);
  e.triplet = triplets_.at(i);
  e.source_id = source_ids_.at(i);
  return e;
}

std::vector<Neighbor> MemoryBank::search(const float* coarse, const float* block_max,
                                         const Eigen::Ref<const VectorXd>& unit_query,
                                         std::size_t k) const {
  const std::size_t m = size();
  if (m <= 1) return {};
  const std::size_t take = std::min(k + 1, m);
  const std::size_t blocks = static_cast<std::size_t>(padded(static_cast<Eigen::Index>(m)) / kBlock);

  // The take-th largest block maximum is a lower bound on the take-th
  // largest score (the maxima are take distinct scores). Single-precision
  // dot products of unit vectors stay within (dim + 2) * eps of the exact
  // ones, so twice that below the bound nothing in the exact top is cut.
  float cut = -std::numeric_limits<float>::infinity();
  if (blocks >= take) {
    std::vector<float> order(block_max, block_max + blocks);
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take - 1),
                     order.end(), std::greater<>());
    cut = order[take - 1] - 4.0f * static_cast<float>(dim_ + 2) * std::numeric_limits<float>::epsilon();
  }

  // Exact rescoring of the survivors, ordered by (score desc, index asc).
  std::vector<Neighbor> best;
  best.reserve(2 * take);
  for (std::size_t b = 0; b < blocks; ++b) {
    if (!(block_max[b] >= cut)) continue;
    for (std::size_t i = b * kBlock; i < std::min(m, (b + 1) * kBlock); ++i) {
      if (!(coarse[i] >= cut)) continue;
      best.push_back(Neighbor{i, unit_keys_.col(static_cast<Eigen::Index>(i)).dot(unit_query)});
    }
  }
  const auto first = static_cast<std::ptrdiff_t>(std::min(take, best.size()));
  std::partial_sort(best.begin(), best.begin() + first, best.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      return a.score > b.score || (a.score == b.score && a.index < b.index);
                    });
  best.resize(static_cast<std::size_t>(first));
  // The best match is dropped: a training query usually retrieves itself.
  best.erase(best.begin());
  return best;
}

std::vector<Neighbor> MemoryBank::query(const VectorXd& q, std::size_t k) const {
  if (q.size() != dim_ && !empty()) throw BankError("query dimension does not match the bank");
  auto out = query_batch(q, k);
  return std::move(out.front());
}

std::vector<std::vector<Neighbor>> MemoryBank::query_batch(const MatrixXd& queries,
                                                           std::size_t k) const {
  if (k < 1) throw BankError("query needs k >= 1");
  std::vector<std::vector<Neighbor>> out(static_cast<std::size_t>(queries.cols()));
  if (empty() || queries.cols() == 0) return out;
  if (queries.rows() != dim_) throw BankError("query dimension does not match the bank");
  if (!queries.allFinite()) throw BankError("query vector is not finite");
  const VectorXd norms = queries.colwise().norm().transpose();
  if (!(norms.minCoeff() > 0.0)) throw BankError("query vector is zero");
  const MatrixXd unit = queries * norms.cwiseInverse().asDiagonal();
  const auto m = static_cast<Eigen::Index>(size());
  const Eigen::Index mp = padded(m);
  Eigen::MatrixXf coarse(mp, queries.cols());
  const Eigen::MatrixXf unit_f = unit.cast<float>();
  detail::coarse_scores(coarse_keys_.data(), static_cast<std::size_t>(m), static_cast<std::size_t>(dim_),
                        unit_f.data(), static_cast<std::size_t>(unit_f.cols()), coarse.data(),
                        static_cast<std::size_t>(mp));
  coarse.bottomRows(mp - m).setConstant(-std::numeric_limits<float>::infinity());
  const Eigen::VectorXf block_max =
      Eigen::Map<const Eigen::MatrixXf>(coarse.data(), kBlock, coarse.size() / kBlock)
          .colwise()
          .maxCoeff()
          .transpose();
  for (Eigen::Index c = 0; c < queries.cols(); ++c) {
    out[static_cast<std::size_t>(c)] =
        search(coarse.col(c).data(), block_max.data() + c * (mp / kBlock), unit.col(c), k);
  }
  return out;
}

void save_bank(const MemoryBank& bank, const std::filesystem::path& path) {
  std::vector<char> buf;
  buf.reserve(kHeaderSize + bank.size() * record_size(bank.dim()));
  buf.insert(buf.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(bank.dim()));
  put_le<std::uint64_t>(buf, bank.size());
  put_le<std::uint32_t>(buf, bank.cap());
  buf.insert(buf.end(), bank.model_hash().begin(), bank.model_hash().end());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto row = bank.keys().row(static_cast<Eigen::Index>(i));
    for (Eigen::Index d = 0; d < bank.dim(); ++d) {
      put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(row[d]));
    }
    const auto& t = bank.triplet(i);
    put_le<std::uint16_t>(buf, bank.value(i));
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(t.subj_class));
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(t.predicate));
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(t.obj_class));
    put_le<std::uint64_t>(buf, bank.source_id(i));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BankError("cannot write bank file " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw BankError("write failed for bank file " + path.string());
}

MemoryBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BankError("cannot open bank file " + path.string());
  const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderSize) throw BankError(path.string() + ": truncated header");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), buf.begin())) {
    throw BankError(path.string() + ": bad magic");
  }
  const char* p = buf.data() + 7;
  const auto dim = get_le<std::uint32_t>(p);
  const auto count = get_le<std::uint64_t>(p + 4);
  const auto cap = get_le<std::uint32_t>(p + 12);
  Digest hash{};
  std::memcpy(hash.data(), p + 16, 32);
  if (dim == 0) throw BankError(path.string() + ": zero dimension");
  const std::size_t rec = record_size(dim);
  if (count > (buf.size() - kHeaderSize) / rec || buf.size() != kHeaderSize + count * rec) {
    throw BankError(path.string() + ": file size does not match header (truncated or corrupt)");
  }
  std::vector<BankEntry> entries(count);
  p = buf.data() + kHeaderSize;
  for (auto& e : entries) {
    e.key.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d, p += 4) {
      e.key[d] = std::bit_cast<float>(get_le<std::uint32_t>(p));
    }
    e.value = get_le<std::uint16_t>(p);
    e.triplet.subj_class = get_le<std::uint16_t>(p + 2);
    e.triplet.predicate = get_le<std::uint16_t>(p + 4);
    e.triplet.obj_class = get_le<std::uint16_t>(p + 6);
    e.source_id = get_le<std::uint64_t>(p + 8);
    p += 16;
  }
  return MemoryBank::from_entries(static_cast<Eigen::Index>(dim), cap, hash, entries);
}

}  // namespace rasgg
