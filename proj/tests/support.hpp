#ifndef RASGG_TESTS_SUPPORT_HPP_
#define RASGG_TESTS_SUPPORT_HPP_

// Small generators and oracles shared by the unit suites.

#include "rasgg/encoder.hpp"
#include "rasgg/relation.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <unistd.h>
#include <iterator>
#include <random>
#include <string>
#include <vector>

namespace rasgg::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline VectorXd random_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

/// Model small enough for exhaustive finite differences.
inline ModelConfig tiny_model(Eigen::Index n_p = 5, Eigen::Index d = 8,
                              FusionKind fusion = FusionKind::kElementwise) {
  ModelConfig c;
  c.feature_dim = 6;
  c.embed_dim = d;
  c.word_dim = 4;
  c.proj_hidden = d;
  c.proj_out = d;
  c.n_entities = 3;
  c.n_predicates = n_p;
  c.fusion = fusion;
  c.embed_init_std = 0.5;  // large enough that prototypes are well separated
  c.gamma_init = 0.5;
  return c;
}

inline Vocabulary make_vocab(std::size_t n_p, std::size_t n_entities) {
  Vocabulary v;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n_p; ++i) names.push_back("p" + std::to_string(i));
  v.predicates = PredicateVocabulary(names);
  for (std::size_t i = 0; i < n_entities; ++i) v.entities.push_back("e" + std::to_string(i));
  return v;
}

inline RelationInstance random_instance(Rng& rng, std::int64_t id, Eigen::Index feature_dim,
                                        int n_entities, int n_p, bool allow_background = false) {
  RelationInstance inst;
  inst.id = id;
  inst.scene_id = id / 4;
  inst.subj_class = uniform_int(rng, 0, n_entities - 1);
  inst.obj_class = uniform_int(rng, 0, n_entities - 1);
  inst.subj_feat = random_vector(rng, feature_dim);
  inst.obj_feat = random_vector(rng, feature_dim);
  inst.union_feat = random_vector(rng, feature_dim);
  if (!(allow_background && uniform(rng, 0.0, 1.0) < 0.2)) {
    inst.predicate = uniform_int(rng, 0, n_p - 1);
  }
  return inst;
}

inline Dataset random_dataset(Rng& rng, std::size_t n, Eigen::Index feature_dim, int n_entities,
                              int n_p, bool allow_background = false) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    d.push_back(random_instance(rng, static_cast<std::int64_t>(i), feature_dim, n_entities, n_p,
                                allow_background));
  }
  return d;
}

/// Every parameter scalar, in visit order.
inline VectorXd flatten(const ModelParameters<double>& p) {
  VectorXd out(p.parameter_count());
  Eigen::Index at = 0;
  p.visit([&](std::string_view, const auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) out[at++] = t.data()[i];
  });
  return out;
}

/// Central finite differences of `f` over every parameter scalar.
inline VectorXd numeric_gradient(const ModelParameters<double>& p,
                                 const std::function<double(const ModelParameters<double>&)>& f,
                                 double h = 1e-5) {
  ModelParameters<double> q = p;
  VectorXd g(p.parameter_count());
  Eigen::Index at = 0;
  q.visit([&](std::string_view, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double keep = t.data()[i];
      t.data()[i] = keep + h;
      const double up = f(q);
      t.data()[i] = keep - h;
      const double down = f(q);
      t.data()[i] = keep;
      g[at++] = (up - down) / (2.0 * h);
    }
  });
  return g;
}

/// ||a - b|| / max(||a||, ||b||, floor) over the whole parameter vector.
inline double relative_error(const VectorXd& a, const VectorXd& b, double floor = 1e-8) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

/// A fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("rasgg-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

}  // namespace rasgg::testing

#endif  // RASGG_TESTS_SUPPORT_HPP_
