#ifndef RASGG_ENCODER_HPP_
#define RASGG_ENCODER_HPP_

#include "rasgg/relation.hpp"
#include "rasgg/rng.hpp"
#include "rasgg/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

namespace rasgg {

class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error("model", what) {}
};

enum class FusionKind { kElementwise, kConcat };

struct ModelConfig {
  Eigen::Index feature_dim = 64;
  Eigen::Index embed_dim = 64;   // d: v_s, v_o, u_p and r
  Eigen::Index word_dim = 32;    // d': predicate word embeddings
  Eigen::Index proj_hidden = 64;
  Eigen::Index proj_out = 64;
  Eigen::Index feat_aug_hidden = 0;  // 0 = no feature-augmentation MLP
  Eigen::Index n_entities = 0;
  Eigen::Index n_predicates = 0;
  FusionKind fusion = FusionKind::kElementwise;
  double embed_init_std = 0.02;
  double gamma_init = 0.1;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Every trainable tensor of the prototype encoder. Vectors are stored as
/// Eigen column vectors; the temperature is kept as log(gamma) so gamma stays
/// positive under unconstrained updates.
template <typename Scalar>
struct ModelParameters {
  using MatT = Mat<Scalar>;
  using VecT = Vec<Scalar>;

  ModelConfig config;
  MatT entity_embed;     // n_e x d
  MatT subj_w;           // d x F
  VecT subj_b;
  MatT obj_w;
  VecT obj_b;
  MatT union_w;
  VecT union_b;
  MatT fuse_w;           // d x 2d, concat fusion only
  VecT fuse_b;
  MatT predicate_embed;  // n_p x d'
  MatT proto_w;          // d x d'
  MatT proj_w1;          // h x d
  VecT proj_b1;
  MatT proj_w2;          // o x h
  VecT proj_b2;
  MatT feat_w1;          // h_f x n_p, feature-augmentation MLP
  VecT feat_b1;
  MatT feat_w2;          // d x h_f
  VecT feat_b2;
  VecT log_gamma;        // size 1

  static constexpr auto tensors() {
    using P = ModelParameters;
    return std::make_tuple(
        std::pair{"entity_embed", &P::entity_embed}, std::pair{"subj_w", &P::subj_w},
        std::pair{"subj_b", &P::subj_b}, std::pair{"obj_w", &P::obj_w},
        std::pair{"obj_b", &P::obj_b}, std::pair{"union_w", &P::union_w},
        std::pair{"union_b", &P::union_b}, std::pair{"fuse_w", &P::fuse_w},
        std::pair{"fuse_b", &P::fuse_b}, std::pair{"predicate_embed", &P::predicate_embed},
        std::pair{"proto_w", &P::proto_w}, std::pair{"proj_w1", &P::proj_w1},
        std::pair{"proj_b1", &P::proj_b1}, std::pair{"proj_w2", &P::proj_w2},
        std::pair{"proj_b2", &P::proj_b2}, std::pair{"feat_w1", &P::feat_w1},
        std::pair{"feat_b1", &P::feat_b1}, std::pair{"feat_w2", &P::feat_w2},
        std::pair{"feat_b2", &P::feat_b2}, std::pair{"log_gamma", &P::log_gamma});
  }

  /// Calls f(name, tensor) for every tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    std::apply([&](auto... t) { (f(std::string_view(t.first), this->*(t.second)), ...); },
               tensors());
  }
  template <typename F>
  void visit(F&& f) const {
    std::apply([&](auto... t) { (f(std::string_view(t.first), this->*(t.second)), ...); },
               tensors());
  }
  /// Calls f(name, mine, theirs) pairing tensors of two parameter sets.
  template <typename F>
  void zip(const ModelParameters& other, F&& f) {
    std::apply(
        [&](auto... t) {
          (f(std::string_view(t.first), this->*(t.second), other.*(t.second)), ...);
        },
        tensors());
  }

  Scalar gamma() const { return std::exp(log_gamma[0]); }
  bool has_feat_aug() const { return feat_w1.size() > 0; }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    visit([&](std::string_view, const auto& t) { n += t.size(); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    visit([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); });
    return ok;
  }

  /// Same shapes as `like`, all zero.
  static ModelParameters zeros_like(const ModelParameters& like) {
    ModelParameters z = like;
    z.visit([](std::string_view, auto& t) { t.setZero(); });
    return z;
  }

  static ModelParameters zeros(const ModelConfig& c) {
    ModelParameters p;
    p.config = c;
    const auto d = c.embed_dim;
    p.entity_embed = MatT::Zero(c.n_entities, d);
    p.subj_w = MatT::Zero(d, c.feature_dim);
    p.subj_b = VecT::Zero(d);
    p.obj_w = MatT::Zero(d, c.feature_dim);
    p.obj_b = VecT::Zero(d);
    p.union_w = MatT::Zero(d, c.feature_dim);
    p.union_b = VecT::Zero(d);
    if (c.fusion == FusionKind::kConcat) {
      p.fuse_w = MatT::Zero(d, 2 * d);
      p.fuse_b = VecT::Zero(d);
    }
    p.predicate_embed = MatT::Zero(c.n_predicates, c.word_dim);
    p.proto_w = MatT::Zero(d, c.word_dim);
    p.proj_w1 = MatT::Zero(c.proj_hidden, d);
    p.proj_b1 = VecT::Zero(c.proj_hidden);
    p.proj_w2 = MatT::Zero(c.proj_out, c.proj_hidden);
    p.proj_b2 = VecT::Zero(c.proj_out);
    if (c.feat_aug_hidden > 0) {
      p.feat_w1 = MatT::Zero(c.feat_aug_hidden, c.n_predicates);
      p.feat_b1 = VecT::Zero(c.feat_aug_hidden);
      p.feat_w2 = MatT::Zero(d, c.feat_aug_hidden);
      p.feat_b2 = VecT::Zero(d);
    }
    p.log_gamma = VecT::Zero(1);
    return p;
  }

  /// Seeded initialization: word/entity tables ~ N(0, embed_init_std^2),
  /// weight matrices ~ N(0, 1/fan_in), biases zero, gamma = gamma_init.
  static ModelParameters initialize(const ModelConfig& c, std::uint64_t seed) {
    if (c.n_entities < 1 || c.n_predicates < 2 || c.feature_dim < 1 || c.embed_dim < 1) {
      throw ModelError("model config has empty dimensions");
    }
    ModelParameters p = zeros(c);
    auto rng = make_stream(seed, "init");
    auto gauss = [&](MatT& m, double std) {
      std::normal_distribution<double> n(0.0, std);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(n(rng));
    };
    auto lecun = [&](MatT& m) {
      if (m.size() > 0) gauss(m, 1.0 / std::sqrt(static_cast<double>(m.cols())));
    };
    gauss(p.entity_embed, c.embed_init_std);
    lecun(p.subj_w);
    lecun(p.obj_w);
    lecun(p.union_w);
    lecun(p.fuse_w);
    gauss(p.predicate_embed, c.embed_init_std);
    lecun(p.proto_w);
    lecun(p.proj_w1);
    lecun(p.proj_w2);
    lecun(p.feat_w1);
    lecun(p.feat_w2);
    p.log_gamma[0] = static_cast<Scalar>(std::log(c.gamma_init));
    return p;
  }

  /// Adds freshly initialized feature-augmentation MLP tensors (no-op when
  /// already present).
  void ensure_feat_aug(Eigen::Index hidden, std::uint64_t seed) {
    if (has_feat_aug() || hidden <= 0) return;
    config.feat_aug_hidden = hidden;
    auto rng = make_stream(seed, "init-feat-aug");
    auto lecun = [&](Eigen::Index rows, Eigen::Index cols) {
      std::normal_distribution<double> n(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
      MatT m(rows, cols);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(n(rng));
      return m;
    };
    feat_w1 = lecun(hidden, config.n_predicates);
    feat_b1 = VecT::Zero(hidden);
    feat_w2 = lecun(config.embed_dim, hidden);
    feat_b2 = VecT::Zero(config.embed_dim);
  }

  ModelParameters& operator+=(const ModelParameters& o) {
    zip(o, [](std::string_view, auto& a, const auto& b) { a += b; });
    return *this;
  }
  ModelParameters& operator*=(Scalar s) {
    visit([&](std::string_view, auto& t) { t *= s; });
    return *this;
  }
};

// --- forward caches ---------------------------------------------------------

/// Relation embedding r = F(v_s, v_o) - u_p and what backward needs.
template <typename Scalar>
struct RelationCache {
  Vec<Scalar> subj_in, obj_in, union_in;
  int subj_class = 0;
  int obj_class = 0;
  Vec<Scalar> v_s, v_o, u;
  Vec<Scalar> fuse_pre;  // v_s + v_o (elementwise) or [v_s; v_o] (concat)
  Vec<Scalar> relation;
};

/// Optional modification of r before projection (feature augmentation or
/// embedding mix-up).
template <typename Scalar>
struct EmbeddingEdit {
  enum class Kind { kNone, kMixup, kFeatAug };
  Kind kind = Kind::kNone;
  Scalar lambda = Scalar(1);
  Vec<Scalar> partner;          // mix-up partner embedding (frozen)
  Vec<Scalar> feat_input;       // mean one-hot of retrieved predicates
  Vec<Scalar> feat_hidden_pre;
  Vec<Scalar> feat_hidden;
};

template <typename Scalar>
struct ProjectionCache {
  Vec<Scalar> input;
  Vec<Scalar> hidden_pre;
  Vec<Scalar> hidden;
  Vec<Scalar> out;
  Scalar norm = Scalar(0);
  Vec<Scalar> unit;
};

/// Normalized prototypes c_j = Proj(W_p t_j) / ||.||, one per column.
template <typename Scalar>
struct PrototypeSet {
  Mat<Scalar> word_proj;   // d x n_p
  Mat<Scalar> hidden_pre;  // h x n_p
  Mat<Scalar> hidden;
  Mat<Scalar> out;         // o x n_p
  Vec<Scalar> norms;
  Mat<Scalar> unit;        // o x n_p

  Eigen::Index count() const { return unit.cols(); }
};

template <typename Scalar>
struct ForwardOutput {
  RelationCache<Scalar> rel;
  EmbeddingEdit<Scalar> edit;
  ProjectionCache<Scalar> proj;
  std::shared_ptr<const PrototypeSet<Scalar>> prototypes;
  Vec<Scalar> logits;  // cosine / gamma
  Scalar gamma = Scalar(1);

  const Vec<Scalar>& r() const { return rel.relation; }
  const Vec<Scalar>& r_bar() const { return proj.unit; }
  const Mat<Scalar>& c_bar() const { return prototypes->unit; }
};

namespace detail {

template <typename Scalar>
inline constexpr Scalar kMinNorm = Scalar(1e-12);

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

template <typename Derived>
auto relu_mask(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return x.unaryExpr([](S v) { return v > S(0) ? S(1) : S(0); });
}

}  // namespace detail

template <typename Scalar>
RelationCache<Scalar> encode_relation(const ModelParameters<Scalar>& p,
                                      const RelationInstance& inst) {
  const auto& c = p.config;
  if (inst.subj_feat.size() != c.feature_dim || inst.obj_feat.size() != c.feature_dim ||
      inst.union_feat.size() != c.feature_dim) {
    throw ModelError("instance " + std::to_string(inst.id) +
                     ": feature dimension does not match the model");
  }
  if (inst.subj_class < 0 || inst.subj_class >= c.n_entities || inst.obj_class < 0 ||
      inst.obj_class >= c.n_entities) {
    throw ModelError("instance " + std::to_string(inst.id) + ": entity class out of range");
  }
  RelationCache<Scalar> rc;
  rc.subj_in = inst.subj_feat.template cast<Scalar>();
  rc.obj_in = inst.obj_feat.template cast<Scalar>();
  rc.union_in = inst.union_feat.template cast<Scalar>();
  rc.subj_class = inst.subj_class;
  rc.obj_class = inst.obj_class;
  rc.v_s = p.subj_w * rc.subj_in + p.subj_b + p.entity_embed.row(rc.subj_class).transpose();
  rc.v_o = p.obj_w * rc.obj_in + p.obj_b + p.entity_embed.row(rc.obj_class).transpose();
  rc.u = p.union_w * rc.union_in + p.union_b;
  if (c.fusion == FusionKind::kElementwise) {
    // F(x, y) = ReLU(x + y) - (x - y)^2
    rc.fuse_pre = rc.v_s + rc.v_o;
    rc.relation = detail::relu(rc.fuse_pre) - (rc.v_s - rc.v_o).cwiseAbs2() - rc.u;
  } else {
    rc.fuse_pre.resize(2 * c.embed_dim);
    rc.fuse_pre << rc.v_s, rc.v_o;
    rc.relation = p.fuse_w * rc.fuse_pre + p.fuse_b - rc.u;
  }
  return rc;
}

template <typename Scalar>
ProjectionCache<Scalar> project(const ModelParameters<Scalar>& p, Vec<Scalar> input) {
  ProjectionCache<Scalar> pc;
  pc.input = std::move(input);
  pc.hidden_pre = p.proj_w1 * pc.input + p.proj_b1;
  pc.hidden = detail::relu(pc.hidden_pre);
  pc.out = p.proj_w2 * pc.hidden + p.proj_b2;
  pc.norm = std::max(pc.out.norm(), detail::kMinNorm<Scalar>);
  pc.unit = pc.out / pc.norm;
  return pc;
}

template <typename Scalar>
std::shared_ptr<const PrototypeSet<Scalar>> make_prototypes(const ModelParameters<Scalar>& p) {
  auto ps = std::make_shared<PrototypeSet<Scalar>>();
  ps->word_proj = p.proto_w * p.predicate_embed.transpose();
  ps->hidden_pre = (p.proj_w1 * ps->word_proj).colwise() + p.proj_b1;
  ps->hidden = detail::relu(ps->hidden_pre);
  ps->out = (p.proj_w2 * ps->hidden).colwise() + p.proj_b2;
  ps->norms = ps->out.colwise().norm().transpose().cwiseMax(detail::kMinNorm<Scalar>);
  ps->unit = ps->out * ps->norms.cwiseInverse().asDiagonal();
  return ps;
}

/// Applies an embedding edit to r. The edit's caches are filled in place.
template <typename Scalar>
Vec<Scalar> apply_edit(const ModelParameters<Scalar>& p, const Vec<Scalar>& r,
                       EmbeddingEdit<Scalar>& edit) {
  using K = typename EmbeddingEdit<Scalar>::Kind;
  switch (edit.kind) {
    case K::kNone:
      return r;
    case K::kMixup:
      return edit.lambda * r + (Scalar(1) - edit.lambda) * edit.partner;
    case K::kFeatAug:
      if (!p.has_feat_aug()) throw ModelError("feature augmentation needs the feat-aug MLP");
      edit.feat_hidden_pre = p.feat_w1 * edit.feat_input + p.feat_b1;
      edit.feat_hidden = detail::relu(edit.feat_hidden_pre);
      return r + p.feat_w2 * edit.feat_hidden + p.feat_b2;
  }
  return r;
}

/// Completes a forward pass from an encoded relation and an optional edit.
template <typename Scalar>
ForwardOutput<Scalar> forward_from(const ModelParameters<Scalar>& p, RelationCache<Scalar> rel,
                                   EmbeddingEdit<Scalar> edit,
                                   std::shared_ptr<const PrototypeSet<Scalar>> protos) {
  ForwardOutput<Scalar> out;
  out.rel = std::move(rel);
  out.edit = std::move(edit);
  out.proj = project(p, apply_edit(p, out.rel.relation, out.edit));
  out.prototypes = protos ? std::move(protos) : make_prototypes(p);
  out.gamma = p.gamma();
  out.logits = (out.prototypes->unit.transpose() * out.proj.unit) / out.gamma;
  return out;
}

template <typename Scalar>
ForwardOutput<Scalar> forward(const ModelParameters<Scalar>& p, const RelationInstance& inst,
                              std::shared_ptr<const PrototypeSet<Scalar>> protos = nullptr) {
  return forward_from(p, encode_relation(p, inst), EmbeddingEdit<Scalar>{}, std::move(protos));
}

/// Index of the largest logit; ties go to the lowest index.
template <typename Derived>
std::size_t predict(const Eigen::MatrixBase<Derived>& logits) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < logits.size(); ++j) {
    if (logits[j] > logits[best]) best = j;
  }
  return static_cast<std::size_t>(best);
}

template <typename Scalar>
std::size_t predict(const ForwardOutput<Scalar>& out) {
  return predict(out.logits);
}

/// Relation embeddings r for every instance, in input order. Work is split
/// into contiguous chunks over `threads` workers; each embedding is computed
/// independently so the result does not depend on the thread count.
template <typename Scalar>
std::vector<std::pair<std::int64_t, Vec<Scalar>>> batch_embed(const ModelParameters<Scalar>& p,
                                                              const Dataset& data,
                                                              unsigned threads = 1) {
  std::vector<std::pair<std::int64_t, Vec<Scalar>>> out(data.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = {data[i].id, encode_relation(p, data[i]).relation};
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(data.size())));
  if (threads <= 1) {
    work(0, data.size());
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  const std::size_t chunk = (data.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(data.size(), b + chunk);
    pool.emplace_back([&, b, e, t] {
      try {
        work(b, e);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return out;
}

// --- reverse mode -------------------------------------------------------------

/// Accumulates parameter gradients over any number of instances that share
/// one prototype set. Instance contributions flow back immediately;
/// prototype gradients are collected and pushed through Proj, W_p and the
/// predicate table once in finish().
template <typename Scalar>
class Backprop {
 public:
  Backprop(const ModelParameters<Scalar>& params,
           std::shared_ptr<const PrototypeSet<Scalar>> protos)
      : p_(params),
        protos_(std::move(protos)),
        grad_(ModelParameters<Scalar>::zeros_like(params)),
        dcbar_(Mat<Scalar>::Zero(protos_->unit.rows(), protos_->unit.cols())) {}

  /// Pushes dL/dlogits of one forward pass back to the parameters.
  void add_logits(const ForwardOutput<Scalar>& out, const Vec<Scalar>& dlogits) {
    const Scalar inv_g = Scalar(1) / out.gamma;
    // logits_j = <r_bar, c_j> * exp(-log_gamma)
    grad_.log_gamma[0] -= dlogits.dot(out.logits);
    const Vec<Scalar> dunit = inv_g * (protos_->unit * dlogits);
    dcbar_.noalias() += inv_g * out.proj.unit * dlogits.transpose();
    const Vec<Scalar> dinput = backward_projection(out.proj, dunit);
    const Vec<Scalar> drel = backward_edit(out.edit, dinput);
    backward_relation(out.rel, drel);
  }

  /// Adds dL/d(c_bar) (same shape as PrototypeSet::unit).
  void add_prototypes(const Mat<Scalar>& dcbar) { dcbar_ += dcbar; }

  /// Adds dL/d(log_gamma) directly.
  void add_log_gamma(Scalar g) { grad_.log_gamma[0] += g; }

  ModelParameters<Scalar> finish() {
    const auto& ps = *protos_;
    // c_bar = out / ||out|| per column
    Mat<Scalar> dout(ps.out.rows(), ps.out.cols());
    for (Eigen::Index j = 0; j < ps.unit.cols(); ++j) {
      const auto u = ps.unit.col(j);
      const auto g = dcbar_.col(j);
      dout.col(j) = (g - u * u.dot(g)) / ps.norms[j];
    }
    grad_.proj_w2.noalias() += dout * ps.hidden.transpose();
    grad_.proj_b2 += dout.rowwise().sum();
    Mat<Scalar> dpre = (p_.proj_w2.transpose() * dout).cwiseProduct(detail::relu_mask(ps.hidden_pre));
    grad_.proj_w1.noalias() += dpre * ps.word_proj.transpose();
    grad_.proj_b1 += dpre.rowwise().sum();
    const Mat<Scalar> dword = p_.proj_w1.transpose() * dpre;  // d x n_p
    // word_proj = W_p * T^T
    grad_.proto_w.noalias() += dword * p_.predicate_embed;
    grad_.predicate_embed.noalias() += dword.transpose() * p_.proto_w;
    dcbar_.setZero();
    return std::move(grad_);
  }

 private:
  Vec<Scalar> backward_projection(const ProjectionCache<Scalar>& pc, const Vec<Scalar>& dunit) {
    const Vec<Scalar> dout = (dunit - pc.unit * pc.unit.dot(dunit)) / pc.norm;
    grad_.proj_w2.noalias() += dout * pc.hidden.transpose();
    grad_.proj_b2 += dout;
    const Vec<Scalar> dpre =
        (p_.proj_w2.transpose() * dout).cwiseProduct(detail::relu_mask(pc.hidden_pre));
    grad_.proj_w1.noalias() += dpre * pc.input.transpose();
    grad_.proj_b1 += dpre;
    return p_.proj_w1.transpose() * dpre;
  }

  Vec<Scalar> backward_edit(const EmbeddingEdit<Scalar>& e, const Vec<Scalar>& dinput) {
    using K = typename EmbeddingEdit<Scalar>::Kind;
    switch (e.kind) {
      case K::kNone:
        return dinput;
      case K::kMixup:
        return e.lambda * dinput;
      case K::kFeatAug: {
        grad_.feat_w2.noalias() += dinput * e.feat_hidden.transpose();
        grad_.feat_b2 += dinput;
        const Vec<Scalar> dpre =
            (p_.feat_w2.transpose() * dinput).cwiseProduct(detail::relu_mask(e.feat_hidden_pre));
        grad_.feat_w1.noalias() += dpre * e.feat_input.transpose();
        grad_.feat_b1 += dpre;
        return dinput;
      }
    }
    return dinput;
  }

  void backward_relation(const RelationCache<Scalar>& rc, const Vec<Scalar>& drel) {
    Vec<Scalar> dvs, dvo;
    if (p_.config.fusion == FusionKind::kElementwise) {
      const Vec<Scalar> mask = detail::relu_mask(rc.fuse_pre);
      const Vec<Scalar> diff2 = Scalar(2) * (rc.v_s - rc.v_o);
      dvs = drel.cwiseProduct(mask - diff2);
      dvo = drel.cwiseProduct(mask + diff2);
    } else {
      grad_.fuse_w.noalias() += drel * rc.fuse_pre.transpose();
      grad_.fuse_b += drel;
      const Vec<Scalar> dcat = p_.fuse_w.transpose() * drel;
      const auto d = p_.config.embed_dim;
      dvs = dcat.head(d);
      dvo = dcat.tail(d);
    }
    // r = F(v_s, v_o) - u
    grad_.union_w.noalias() -= drel * rc.union_in.transpose();
    grad_.union_b -= drel;
    grad_.subj_w.noalias() += dvs * rc.subj_in.transpose();
    grad_.subj_b += dvs;
    grad_.obj_w.noalias() += dvo * rc.obj_in.transpose();
    grad_.obj_b += dvo;
    grad_.entity_embed.row(rc.subj_class) += dvs.transpose();
    grad_.entity_embed.row(rc.obj_class) += dvo.transpose();
  }

  const ModelParameters<Scalar>& p_;
  std::shared_ptr<const PrototypeSet<Scalar>> protos_;
  ModelParameters<Scalar> grad_;
  Mat<Scalar> dcbar_;
};

}  // namespace rasgg

#endif  // RASGG_ENCODER_HPP_
