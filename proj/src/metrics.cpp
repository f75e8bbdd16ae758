#include "rasgg/metrics.hpp"

#include "rasgg/loss.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

namespace rasgg {

std::size_t MatchCounts::total_hits() const {
  std::size_t n = 0;
  for (auto h : hits) n += h;
  return n;
}

std::size_t MatchCounts::total_gt() const {
  std::size_t n = 0;
  for (auto t : totals) n += t;
  return n;
}

MatchCounts match_counts(std::span<const Scene> scenes, std::size_t k, std::size_t n_p) {
  MatchCounts mc;
  mc.hits.assign(n_p, 0);
  mc.totals.assign(n_p, 0);
  std::vector<const ScoredTriplet*> ranked;
  for (const auto& scene : scenes) {
    ranked.clear();
    for (const auto& p : scene.predictions) {
      if (!std::isfinite(p.score)) throw EvalError("prediction score is not finite");
      ranked.push_back(&p);
    }
    const std::size_t take = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take),
                      ranked.end(), [](const ScoredTriplet* a, const ScoredTriplet* b) {
                        return a->score > b->score ||
                               (a->score == b->score && a->pair_id < b->pair_id);
                      });
    std::set<std::pair<std::int64_t, std::size_t>> top;
    for (std::size_t i = 0; i < take; ++i) top.emplace(ranked[i]->pair_id, ranked[i]->predicate);
    for (const auto& g : scene.gt) {
      if (g.predicate >= n_p) throw EvalError("GT predicate out of range");
      ++mc.totals[g.predicate];
      if (top.contains({g.pair_id, g.predicate})) ++mc.hits[g.predicate];
    }
  }
  return mc;
}

double recall_at_k(std::span<const Scene> scenes, std::size_t k, std::size_t n_p) {
  const auto mc = match_counts(scenes, k, n_p);
  if (mc.total_gt() == 0) throw EvalError("recall is undefined without ground truth");
  return static_cast<double>(mc.total_hits()) / static_cast<double>(mc.total_gt());
}

namespace {

std::vector<std::optional<double>> class_recall(const MatchCounts& mc) {
  std::vector<std::optional<double>> r(mc.totals.size());
  for (std::size_t c = 0; c < r.size(); ++c) {
    if (mc.totals[c] > 0) {
      r[c] = static_cast<double>(mc.hits[c]) / static_cast<double>(mc.totals[c]);
    }
  }
  return r;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& v,
                              const std::vector<std::size_t>& classes) {
  double sum = 0.0;
  std::size_t n = 0;
  for (auto c : classes) {
    if (v[c]) {
      sum += *v[c];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

double mean_recall_at_k(std::span<const Scene> scenes, std::size_t k, std::size_t n_p) {
  const auto mc = match_counts(scenes, k, n_p);
  std::vector<std::size_t> all(n_p);
  for (std::size_t c = 0; c < n_p; ++c) all[c] = c;
  const auto m = mean_of(class_recall(mc), all);
  if (!m) throw EvalError("mean recall is undefined without ground truth");
  return *m;
}

double f_at_k(double r, double mr) {
  if (r + mr == 0.0) return 0.0;
  return 2.0 * r * mr / (r + mr);
}

EvalReport make_report(std::span<const Scene> scenes, std::span<const std::size_t> ks,
                       std::size_t n_p, const ClassGrouping& grouping) {
  if (grouping.order.size() != n_p) throw EvalError("class grouping does not match n_p");
  EvalReport rep;
  rep.n_scenes = scenes.size();
  std::vector<std::size_t> all(n_p);
  for (std::size_t c = 0; c < n_p; ++c) all[c] = c;
  std::vector<std::size_t> head(grouping.order.begin(), grouping.order.begin() + static_cast<std::ptrdiff_t>(grouping.head_end));
  std::vector<std::size_t> body(grouping.order.begin() + static_cast<std::ptrdiff_t>(grouping.head_end),
                                grouping.order.begin() + static_cast<std::ptrdiff_t>(grouping.tail_begin));
  std::vector<std::size_t> tail(grouping.order.begin() + static_cast<std::ptrdiff_t>(grouping.tail_begin),
                                grouping.order.end());
  for (auto k : ks) {
    if (k < 1) throw EvalError("K must be >= 1");
    const auto mc = match_counts(scenes, k, n_p);
    if (mc.total_gt() == 0) throw EvalError("evaluation data has no labeled relations");
    rep.n_gt = mc.total_gt();
    const auto pc = class_recall(mc);
    const double r = 100.0 * static_cast<double>(mc.total_hits()) / static_cast<double>(mc.total_gt());
    const double mr = 100.0 * *mean_of(pc, all);
    rep.r_at_k[k] = r;
    rep.mr_at_k[k] = mr;
    rep.f_at_k[k] = f_at_k(r, mr);
    auto& pcr = rep.per_class_recall[k];
    for (const auto& v : pc) pcr.push_back(v ? std::optional<double>(100.0 * *v) : std::nullopt);
    auto pct = [](std::optional<double> v) { return v ? std::optional<double>(100.0 * *v) : v; };
    rep.group_recall[k] = {pct(mean_of(pc, head)), pct(mean_of(pc, body)), pct(mean_of(pc, tail))};
  }
  return rep;
}

std::vector<Scene> build_scenes(const Dataset& data, const Predictor& predictor, unsigned threads) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].is_background()) labeled.push_back(i);
  }
  std::vector<std::pair<std::size_t, double>> preds(labeled.size());
  auto work = [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) preds[i] = predictor(data[labeled[i]]);
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(labeled.size(), 1))));
  if (threads == 1) {
    work(0, labeled.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (labeled.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = std::min(labeled.size(), t * chunk);
      const std::size_t e = std::min(labeled.size(), b + chunk);
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
  }

  std::map<std::int64_t, Scene> by_scene;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const auto& inst = data[labeled[i]];
    auto& scene = by_scene[inst.scene_id];
    scene.predictions.push_back({inst.id, preds[i].first, preds[i].second});
    scene.gt.push_back({inst.id, static_cast<std::size_t>(*inst.predicate)});
  }
  std::vector<Scene> scenes;
  scenes.reserve(by_scene.size());
  for (auto& [id, s] : by_scene) scenes.push_back(std::move(s));
  return scenes;
}

std::pair<std::size_t, double> predict_with_score(
    const ModelParameters<double>& params, const RelationInstance& inst,
    const std::shared_ptr<const PrototypeSet<double>>& protos) {
  const auto out = forward(params, inst, protos);
  const std::size_t c = predict(out);
  return {c, softmax(out.logits)[static_cast<Eigen::Index>(c)]};
}

EvalReport evaluate(const ModelParameters<double>& params, const Dataset& data,
                    std::span<const std::size_t> ks, const ClassGrouping& grouping,
                    unsigned threads) {
  const auto protos = make_prototypes(params);
  const auto scenes = build_scenes(
      data, [&](const RelationInstance& inst) { return predict_with_score(params, inst, protos); },
      threads);
  return make_report(scenes, ks, static_cast<std::size_t>(params.config.n_predicates), grouping);
}

void write_report_csv(const EvalReport& report, const PredicateVocabulary& names,
                      std::ostream& out) {
  out << "metric,K,value\n";
  out << std::setprecision(10);
  auto row = [&](const std::string& m, std::size_t k, double v) {
    out << m << ',' << k << ',' << v << '\n';
  };
  for (const auto& [k, v] : report.r_at_k) row("R", k, v);
  for (const auto& [k, v] : report.mr_at_k) row("mR", k, v);
  for (const auto& [k, v] : report.f_at_k) row("F", k, v);
  for (const auto& [k, g] : report.group_recall) {
    if (g.head) row("head_mR", k, *g.head);
    if (g.body) row("body_mR", k, *g.body);
    if (g.tail) row("tail_mR", k, *g.tail);
  }
  for (const auto& [k, pc] : report.per_class_recall) {
    for (std::size_t c = 0; c < pc.size(); ++c) {
      if (pc[c]) row("recall:" + names.name(c), k, *pc[c]);
    }
  }
}

void print_report_table(const EvalReport& report, std::ostream& out) {
  auto cell = [](std::optional<double> v) {
    std::ostringstream s;
    if (v) {
      s << std::fixed << std::setprecision(2) << *v;
    } else {
      s << "-";
    }
    return s.str();
  };
  out << std::left << std::setw(6) << "K" << std::right << std::setw(9) << "R@K" << std::setw(9)
      << "mR@K" << std::setw(9) << "F@K" << std::setw(9) << "head" << std::setw(9) << "body"
      << std::setw(9) << "tail" << '\n';
  for (const auto& [k, r] : report.r_at_k) {
    const auto& g = report.group_recall.at(k);
    out << std::left << std::setw(6) << k << std::right << std::setw(9) << cell(r) << std::setw(9)
        << cell(report.mr_at_k.at(k)) << std::setw(9) << cell(report.f_at_k.at(k)) << std::setw(9)
        << cell(g.head) << std::setw(9) << cell(g.body) << std::setw(9) << cell(g.tail) << '\n';
  }
}

std::string report_json(const EvalReport& report, const PredicateVocabulary& names) {
  nlohmann::ordered_json j;
  auto opt = [](std::optional<double> v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
  j["n_scenes"] = report.n_scenes;
  j["n_gt"] = report.n_gt;
  for (const auto& [k, r] : report.r_at_k) {
    auto& e = j["by_k"][std::to_string(k)];
    e["R"] = r;
    e["mR"] = report.mr_at_k.at(k);
    e["F"] = report.f_at_k.at(k);
    const auto& g = report.group_recall.at(k);
    e["head_mR"] = opt(g.head);
    e["body_mR"] = opt(g.body);
    e["tail_mR"] = opt(g.tail);
    auto& pc = e["per_class_recall"];
    const auto& v = report.per_class_recall.at(k);
    for (std::size_t c = 0; c < v.size(); ++c) pc[names.name(c)] = opt(v[c]);
  }
  return j.dump(2);
}

}  // namespace rasgg
