#pragma once

// Reference implementations used to check the estimator. Nothing in here
// shares code with partition.hpp or the EMPIDA reduction in estimator.hpp.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "irs/dataset.hpp"
#include "irs/distance.hpp"
#include "irs/error.hpp"
#include "irs/estimator.hpp"
#include "irs/scm.hpp"

namespace irs {

namespace oracle_detail {

inline std::size_t grid_of(const std::vector<std::size_t>& cards, std::span<const std::size_t> factors,
                           std::size_t budget) {
  std::size_t g = 1;
  for (auto i : factors) {
    if (g > budget / cards[i]) throw ValidationError("enumeration budget exceeded");
    g *= cards[i];
  }
  return g;
}

// Odometer over the coordinates `factors` of `t`, last factor fastest.
inline bool next_tuple(std::vector<std::int32_t>& t, std::span<const std::size_t> factors,
                       const std::vector<std::size_t>& cards) {
  for (std::size_t a = factors.size(); a-- > 0;) {
    const auto i = factors[a];
    if (static_cast<std::size_t>(++t[i]) < cards[i]) return true;
    t[i] = 0;
  }
  return false;
}

inline std::size_t index_of(std::span<const std::int32_t> t, std::span<const std::size_t> factors,
                            const std::vector<std::size_t>& cards) {
  std::size_t idx = 0;
  for (auto i : factors) idx = idx * cards[i] + static_cast<std::size_t>(t[i]);
  return idx;
}

inline bool matches(std::span<const std::int32_t> row, std::span<const std::int32_t> t,
                    std::span<const std::size_t> factors) {
  for (auto i : factors)
    if (row[i] != t[i]) return false;
  return true;
}

}  // namespace oracle_detail

/// Naive EMPIDA on a dataset: enumerates every realization of G_I and G_J,
/// scans all rows for each, and recounts frequencies pairwise (O(N^2)).
/// Uses the same estimator settings (mode, self_normalize, distance,
/// min_cell_size) as the fast implementation.
inline double oracle_empida(const LabeledDataset& d, const IndexSpec& spec,
                            const EstimatorConfig& cfg = {}, std::size_t budget = 1'000'000) {
  using namespace oracle_detail;
  validate(spec, d);
  const std::size_t n = d.rows();
  const std::size_t k = d.factor_count();
  std::vector<std::size_t> cards(d.cardinalities().begin(), d.cardinalities().end());
  if (grid_of(cards, spec.targets, budget) > budget / grid_of(cards, spec.nuisance, budget))
    throw ValidationError("enumeration budget exceeded");

  std::vector<std::size_t> all(k), rest, target_rest;
  for (std::size_t i = 0; i < k; ++i) {
    all[i] = i;
    const bool in_i = std::find(spec.targets.begin(), spec.targets.end(), i) != spec.targets.end();
    const bool in_j = std::find(spec.nuisance.begin(), spec.nuisance.end(), i) != spec.nuisance.end();
    if (!in_i) target_rest.push_back(i);
    if (!in_i && !in_j) rest.push_back(i);
  }
  std::vector<double> w_ref(n, 1.0), w_cell(n, 1.0);
  if (cfg.mode == MeanMode::weighted) {
    for (std::size_t r = 0; r < n; ++r) {
      double c_full = 0, c_rest = 0, c_target_rest = 0;
      for (std::size_t s = 0; s < n; ++s) {
        const auto a = d.factor_row(r), b = d.factor_row(s);
        c_full += matches(b, a, all);
        c_rest += matches(b, a, rest);
        c_target_rest += matches(b, a, target_rest);
      }
      const double nd = static_cast<double>(n);
      w_ref[r] = c_target_rest / (nd * c_full);
      w_cell[r] = c_rest / (nd * c_full);
    }
  }
  const bool normalize = cfg.mode == MeanMode::conditional || cfg.self_normalize;
  auto mean_of = [&](const std::vector<std::size_t>& rows, const std::vector<double>& w) {
    std::vector<double> m(spec.features.size(), 0.0);
    double total = 0.0;
    for (auto r : rows) {
      total += w[r];
      for (std::size_t a = 0; a < spec.features.size(); ++a) m[a] += w[r] * d.code(r, spec.features[a]);
    }
    if (normalize)
      for (auto& v : m) v /= total;
    return m;
  };

  double result = 0.0;
  std::vector<std::int32_t> t(k, 0);
  do {
    std::vector<std::size_t> in_i;
    for (std::size_t r = 0; r < n; ++r)
      if (matches(d.factor_row(r), t, spec.targets)) in_i.push_back(r);
    if (in_i.empty()) continue;
    const auto reference = mean_of(in_i, w_ref);
    double mpida = 0.0;
    std::fill(t.begin(), t.end(), 0);
    for (std::size_t a = 0; a < spec.targets.size(); ++a)
      t[spec.targets[a]] = d.factor(in_i.front(), spec.targets[a]);
    do {
      std::vector<std::size_t> in_ij;
      for (auto r : in_i)
        if (matches(d.factor_row(r), t, spec.nuisance)) in_ij.push_back(r);
      if (in_ij.empty() || in_ij.size() < cfg.min_cell_size) continue;
      mpida = std::max(mpida, distance(reference, mean_of(in_ij, w_cell), cfg.distance));
    } while (next_tuple(t, spec.nuisance, cards));
    result += static_cast<double>(in_i.size()) / static_cast<double>(n) * mpida;
  } while (next_tuple(t, spec.targets, cards));
  return result;
}

/// Exact joint p(g) of an SCM over its factor grid in lexicographic order.
inline std::vector<double> joint_distribution(const ScmConfig& cfg, std::size_t budget = 1'000'000) {
  validate(cfg);
  const std::size_t grid = grid_size(cfg);
  std::size_t confounder_grid = 1;
  for (const auto& c : cfg.confounders) confounder_grid *= c.prior.size();
  if (grid > budget || confounder_grid > budget / grid)
    throw ValidationError("enumeration budget exceeded");
  const std::size_t k = cfg.factors.size();
  std::vector<double> p(grid, 0.0);
  std::vector<std::size_t> c(cfg.confounders.size(), 0);
  for (std::size_t ci = 0; ci < confounder_grid; ++ci) {
    std::size_t rem = ci;
    double pc = 1.0;
    for (std::size_t a = c.size(); a-- > 0;) {
      c[a] = rem % cfg.confounders[a].prior.size();
      rem /= cfg.confounders[a].prior.size();
      pc *= cfg.confounders[a].prior[c[a]];
    }
    if (pc == 0.0) continue;
    for (std::size_t gi = 0; gi < grid; ++gi) {
      std::size_t idx = gi;
      double pg = pc;
      for (std::size_t i = k; i-- > 0;) {
        const auto v = idx % cfg.factors[i].cardinality;
        idx /= cfg.factors[i].cardinality;
        pg *= cfg.factors[i].table[cfg.parent_row(i, c)][v];
      }
      p[gi] += pg;
    }
  }
  return p;
}

namespace oracle_detail {

struct AnalyticModel {
  std::vector<std::size_t> cards;
  std::vector<double> joint;
  std::vector<std::size_t> all;
  std::vector<std::vector<double>> codes;  // noise-free E[Z_L | g] per grid cell

  AnalyticModel(const ScmConfig& cfg, const SyntheticEncoder& enc,
                const std::vector<std::size_t>& features, std::size_t budget)
      : joint(joint_distribution(cfg, budget)) {
    enc.validate(cfg.factors.size());
    for (std::size_t i = 0; i < cfg.factors.size(); ++i) {
      cards.push_back(cfg.factors[i].cardinality);
      all.push_back(i);
    }
    for (auto l : features)
      if (l >= enc.output_dim) throw ValidationError("feature index out of range for the encoder");
    std::vector<std::int32_t> t(cards.size(), 0);
    do {
      const auto z = enc.encode(t);
      std::vector<double> sel;
      for (auto l : features) sel.push_back(z[l]);
      codes.push_back(std::move(sel));
    } while (next_tuple(t, all, cards));
  }

  // E[Z_L | do(G_A <- t_A)] = sum_g p(g) f(t_A, g_{\A}).
  std::vector<double> interventional(std::span<const std::size_t> fixed,
                                     const std::vector<std::int32_t>& t) const {
    std::vector<double> m(codes.front().size(), 0.0);
    std::vector<std::int32_t> g(cards.size(), 0);
    std::size_t idx = 0;
    do {
      auto h = g;
      for (auto i : fixed) h[i] = t[i];
      const auto& z = codes[index_of(h, all, cards)];
      for (std::size_t a = 0; a < m.size(); ++a) m[a] += joint[idx] * z[a];
      ++idx;
    } while (next_tuple(g, all, cards));
    return m;
  }

  double marginal(std::span<const std::size_t> fixed, const std::vector<std::int32_t>& t) const {
    double p = 0.0;
    std::vector<std::int32_t> g(cards.size(), 0);
    std::size_t idx = 0;
    do {
      if (matches(g, t, fixed)) p += joint[idx];
      ++idx;
    } while (next_tuple(g, all, cards));
    return p;
  }
};

inline std::vector<std::int32_t> assignment_tuple(std::size_t k,
                                                  const std::vector<std::pair<std::size_t, std::int32_t>>& a,
                                                  std::vector<std::size_t>& fixed) {
  std::vector<std::int32_t> t(k, 0);
  for (const auto& [i, v] : a) {
    if (i >= k) throw ValidationError("assignment factor out of range");
    t[i] = v;
    fixed.push_back(i);
  }
  return t;
}

}  // namespace oracle_detail

/// Exact E[Z_L | do(G_A <- a)] by the adjustment formula over the SCM's joint table.
inline std::vector<double> analytic_interventional_mean(
    const ScmConfig& cfg, const SyntheticEncoder& enc, const std::vector<std::size_t>& features,
    const std::vector<std::pair<std::size_t, std::int32_t>>& assignment,
    std::size_t budget = 1'000'000) {
  const oracle_detail::AnalyticModel model(cfg, enc, features, budget);
  std::vector<std::size_t> fixed;
  const auto t = oracle_detail::assignment_tuple(cfg.factors.size(), assignment, fixed);
  return model.interventional(fixed, t);
}

/// Exact observational E[Z_L | G_A = a].
inline std::vector<double> analytic_conditional_mean(
    const ScmConfig& cfg, const SyntheticEncoder& enc, const std::vector<std::size_t>& features,
    const std::vector<std::pair<std::size_t, std::int32_t>>& assignment,
    std::size_t budget = 1'000'000) {
  using namespace oracle_detail;
  const AnalyticModel model(cfg, enc, features, budget);
  std::vector<std::size_t> fixed;
  const auto t = assignment_tuple(cfg.factors.size(), assignment, fixed);
  std::vector<double> m(features.size(), 0.0);
  double total = 0.0;
  std::vector<std::int32_t> g(model.cards.size(), 0);
  std::size_t idx = 0;
  do {
    if (matches(g, t, fixed)) {
      total += model.joint[idx];
      for (std::size_t a = 0; a < m.size(); ++a) m[a] += model.joint[idx] * model.codes[idx][a];
    }
    ++idx;
  } while (next_tuple(g, model.all, model.cards));
  if (!(total > 0.0)) throw ValidationError("conditioning event has probability zero");
  for (auto& v : m) v /= total;
  return m;
}

/// Exact EMPIDA(L | I, J) of an SCM + encoder. The outer expectation uses the
/// observational p(g_I); the supremum ranges over g_J with p(g_I, g_J) > 0.
inline double oracle_empida(const ScmConfig& cfg, const SyntheticEncoder& enc, const IndexSpec& spec,
                            Distance dist = Distance::l2, std::size_t budget = 1'000'000) {
  using namespace oracle_detail;
  const AnalyticModel model(cfg, enc, spec.features, budget);
  const std::size_t k = model.cards.size();
  if (spec.nuisance.empty()) throw ValidationError("nuisance factor set J must not be empty");
  std::vector<std::size_t> ij = spec.targets;
  ij.insert(ij.end(), spec.nuisance.begin(), spec.nuisance.end());

  double result = 0.0;
  std::vector<std::int32_t> t(k, 0);
  do {
    const double p_i = model.marginal(spec.targets, t);
    if (p_i <= 0.0) continue;
    const auto reference = model.interventional(spec.targets, t);
    double mpida = 0.0;
    std::vector<std::int32_t> u = t;
    for (auto j : spec.nuisance) u[j] = 0;
    do {
      if (model.marginal(ij, u) <= 0.0) continue;
      mpida = std::max(mpida, distance(reference, model.interventional(ij, u), dist));
    } while (next_tuple(u, spec.nuisance, model.cards));
    result += p_i * mpida;
  } while (next_tuple(t, spec.targets, model.cards));
  return result;
}

/// Exact IRS(L | I, J) of an SCM + encoder.
inline double oracle_irs(const ScmConfig& cfg, const SyntheticEncoder& enc, const IndexSpec& spec,
                         Distance dist = Distance::l2, std::size_t budget = 1'000'000) {
  std::vector<std::size_t> all(cfg.factors.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const double norm = oracle_empida(cfg, enc, IndexSpec{spec.features, {}, all}, dist, budget);
  if (!(norm > 0.0)) throw ValidationError("feature set is constant under the SCM");
  return 1.0 - oracle_empida(cfg, enc, spec, dist, budget) / norm;
}

}  // namespace irs
