#ifndef RASGG_LOSS_HPP_
#define RASGG_LOSS_HPP_

#include "rasgg/encoder.hpp"
#include "rasgg/relation.hpp"

#include <cmath>

namespace rasgg {

class LossError : public Error {
 public:
  explicit LossError(const std::string& what) : Error("loss", what) {}
};

struct LossConfig {
  double gamma_prime = 7.0;   // margin of the prototype distance hinge
  double reg1_weight = 1.0;
  double reg2_weight = 1.0;
  bool ips_enabled = false;   // inverse-propensity CE as a diagnostic objective
};

template <typename Scalar>
struct LossBundle {
  Scalar value = Scalar(0);
  ModelParameters<Scalar> grad;
};

/// Value and gradient w.r.t. the prototype matrix of a prototype-only term.
template <typename Scalar>
struct PrototypeTerm {
  Scalar value = Scalar(0);
  Mat<Scalar> dcbar;
};

template <typename Derived>
Vec<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  Vec<S> e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& logits) {
  const auto m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum());
}

/// Cross entropy -sum_i y_i log softmax(logits)_i against a target
/// distribution (weights need not sum to one). Returns the value; `dlogits`
/// receives the gradient.
template <typename Scalar>
Scalar soft_cross_entropy(const Vec<Scalar>& logits, const Vec<Scalar>& target,
                          Vec<Scalar>* dlogits = nullptr) {
  const Scalar lse = log_sum_exp(logits);
  const Scalar value = -(target.array() * (logits.array() - lse)).sum();
  if (dlogits != nullptr) *dlogits = softmax(logits) * target.sum() - target;
  return value;
}

template <typename Scalar>
Vec<Scalar> two_hot(Eigen::Index n, std::size_t gt, std::size_t aug, Scalar lambda) {
  Vec<Scalar> y = Vec<Scalar>::Zero(n);
  y[static_cast<Eigen::Index>(gt)] += lambda;
  y[static_cast<Eigen::Index>(aug)] += Scalar(1) - lambda;
  return y;
}

namespace detail {

template <typename Scalar>
LossBundle<Scalar> from_logit_grad(const ModelParameters<Scalar>& p,
                                   const ForwardOutput<Scalar>& out, Scalar value,
                                   const Vec<Scalar>& dlogits) {
  Backprop<Scalar> bp(p, out.prototypes);
  bp.add_logits(out, dlogits);
  return {value, bp.finish()};
}

template <typename Scalar>
LossBundle<Scalar> from_prototype_term(const ModelParameters<Scalar>& p,
                                       const std::shared_ptr<const PrototypeSet<Scalar>>& protos,
                                       const PrototypeTerm<Scalar>& term) {
  Backprop<Scalar> bp(p, protos);
  bp.add_prototypes(term.dcbar);
  return {term.value, bp.finish()};
}

inline void check_class(std::size_t k, Eigen::Index n_p) {
  if (k >= static_cast<std::size_t>(n_p)) throw LossError("class index out of range");
}

}  // namespace detail

/// Prototype loss: -log softmax(cos(r_bar, c_j) / gamma)[gt].
template <typename Scalar>
LossBundle<Scalar> proto_loss(const ModelParameters<Scalar>& p, const ForwardOutput<Scalar>& out,
                              std::size_t gt) {
  detail::check_class(gt, out.logits.size());
  Vec<Scalar> y = Vec<Scalar>::Zero(out.logits.size());
  y[static_cast<Eigen::Index>(gt)] = Scalar(1);
  Vec<Scalar> dl;
  const Scalar v = soft_cross_entropy(out.logits, y, &dl);
  return detail::from_logit_grad(p, out, v, dl);
}

/// lambda * CE(gt) + (1 - lambda) * CE(aug).
template <typename Scalar>
LossBundle<Scalar> multi_proto_loss(const ModelParameters<Scalar>& p,
                                    const ForwardOutput<Scalar>& out, std::size_t gt,
                                    std::size_t aug, Scalar lambda) {
  detail::check_class(gt, out.logits.size());
  detail::check_class(aug, out.logits.size());
  if (!(lambda >= Scalar(0) && lambda <= Scalar(1))) throw LossError("lambda outside [0,1]");
  const Vec<Scalar> y = two_hot<Scalar>(out.logits.size(), gt, aug, lambda);
  Vec<Scalar> dl;
  const Scalar v = soft_cross_entropy(out.logits, y, &dl);
  return detail::from_logit_grad(p, out, v, dl);
}

/// sqrt(sum over ordered pairs i != j of (c_i . c_j)^2). The gradient at the
/// all-orthogonal point (value 0) is taken as zero.
template <typename Scalar>
PrototypeTerm<Scalar> prototype_similarity(const Mat<Scalar>& cbar) {
  if (cbar.cols() < 2) throw LossError("similarity regularizer needs >= 2 prototypes");
  Mat<Scalar> gram = cbar.transpose() * cbar;
  gram.diagonal().setZero();
  const Scalar s = gram.squaredNorm();
  PrototypeTerm<Scalar> t;
  t.value = std::sqrt(s);
  if (t.value > Scalar(0)) {
    t.dcbar = (Scalar(2) / t.value) * (cbar * gram);
  } else {
    t.dcbar = Mat<Scalar>::Zero(cbar.rows(), cbar.cols());
  }
  return t;
}

/// max(gamma' - (1/n) sum over ordered pairs i != j of ||c_i - c_j||^2, 0).
template <typename Scalar>
PrototypeTerm<Scalar> prototype_distance(const Mat<Scalar>& cbar, Scalar gamma_prime) {
  if (cbar.cols() < 2) throw LossError("distance regularizer needs >= 2 prototypes");
  if (gamma_prime < Scalar(0)) throw LossError("gamma' must be >= 0");
  const Scalar n = static_cast<Scalar>(cbar.cols());
  const Vec<Scalar> sum = cbar.rowwise().sum();
  // sum_{i != j} ||c_i - c_j||^2 = 2n sum_i ||c_i||^2 - 2 ||sum_i c_i||^2
  const Scalar spread = (Scalar(2) * n * cbar.squaredNorm() - Scalar(2) * sum.squaredNorm()) / n;
  PrototypeTerm<Scalar> t;
  const Scalar margin = gamma_prime - spread;
  if (margin > Scalar(0)) {
    t.value = margin;
    t.dcbar = -(Scalar(4) * cbar - (Scalar(4) / n) * sum.replicate(1, cbar.cols()));
  } else {
    t.value = Scalar(0);
    t.dcbar = Mat<Scalar>::Zero(cbar.rows(), cbar.cols());
  }
  return t;
}

template <typename Scalar>
LossBundle<Scalar> reg1(const ModelParameters<Scalar>& p,
                        const std::shared_ptr<const PrototypeSet<Scalar>>& protos) {
  return detail::from_prototype_term(p, protos, prototype_similarity(protos->unit));
}

template <typename Scalar>
LossBundle<Scalar> reg2(const ModelParameters<Scalar>& p,
                        const std::shared_ptr<const PrototypeSet<Scalar>>& protos,
                        Scalar gamma_prime) {
  return detail::from_prototype_term(p, protos, prototype_distance(protos->unit, gamma_prime));
}

/// -sum_i inverse[i] * y_i * log probs[i] for a one-hot observed label.
template <typename Scalar>
Scalar ips_value(const Vec<Scalar>& probs, const LabelDistribution& observed,
                 const PropensityTable& prop) {
  if (!observed.is_one_hot()) {
    throw LossError("inverse-propensity loss is undefined for a background label");
  }
  const auto i = static_cast<Eigen::Index>(observed.hot_index());
  return -static_cast<Scalar>(prop.inverse[i]) * std::log(probs[i]);
}

template <typename Scalar>
LossBundle<Scalar> ips_loss(const ModelParameters<Scalar>& p, const ForwardOutput<Scalar>& out,
                            const LabelDistribution& observed, const PropensityTable& prop) {
  if (!observed.is_one_hot()) {
    throw LossError("inverse-propensity loss is undefined for a background label");
  }
  if (prop.n_p() != static_cast<std::size_t>(out.logits.size()) ||
      observed.size() != prop.n_p()) {
    throw LossError("propensity table size does not match the model");
  }
  const Vec<Scalar> y = (observed.weights().array() * prop.inverse.array()).matrix().template cast<Scalar>();
  Vec<Scalar> dl;
  const Scalar v = soft_cross_entropy(out.logits, y, &dl);
  return detail::from_logit_grad(p, out, v, dl);
}

/// multi-prototype loss + reg1_weight * reg1 + reg2_weight * reg2, with the
/// gradients summed through one shared backward pass.
template <typename Scalar>
LossBundle<Scalar> final_loss(const ModelParameters<Scalar>& p, const ForwardOutput<Scalar>& out,
                              std::size_t gt, std::size_t aug, Scalar lambda,
                              const LossConfig& cfg) {
  detail::check_class(gt, out.logits.size());
  detail::check_class(aug, out.logits.size());
  const Vec<Scalar> y = two_hot<Scalar>(out.logits.size(), gt, aug, lambda);
  Vec<Scalar> dl;
  Scalar value = soft_cross_entropy(out.logits, y, &dl);
  Backprop<Scalar> bp(p, out.prototypes);
  bp.add_logits(out, dl);
  const auto sim = prototype_similarity(out.c_bar());
  const auto dist = prototype_distance(out.c_bar(), static_cast<Scalar>(cfg.gamma_prime));
  const auto w1 = static_cast<Scalar>(cfg.reg1_weight);
  const auto w2 = static_cast<Scalar>(cfg.reg2_weight);
  value += w1 * sim.value + w2 * dist.value;
  bp.add_prototypes(w1 * sim.dcbar + w2 * dist.dcbar);
  return {value, bp.finish()};
}

}  // namespace rasgg

#endif  // RASGG_LOSS_HPP_
