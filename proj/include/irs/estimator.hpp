#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irs/dataset.hpp"
#include "irs/distance.hpp"
#include "irs/error.hpp"
#include "irs/parallel.hpp"
#include "irs/partition.hpp"

namespace irs {

/// weighted: importance-weighted (backdoor-adjusted) means.
/// conditional: plain cell means, valid without confounding.
enum class MeanMode { weighted, conditional };

enum class FastPath { automatic, on, off };

inline std::string_view to_string(MeanMode m) {
  return m == MeanMode::weighted ? "weighted" : "conditional";
}

inline std::string_view to_string(FastPath f) {
  switch (f) {
    case FastPath::automatic: return "auto";
    case FastPath::on: return "on";
    case FastPath::off: return "off";
  }
  return "?";
}

inline MeanMode parse_mean_mode(std::string_view s) {
  if (s == "weighted") return MeanMode::weighted;
  if (s == "conditional") return MeanMode::conditional;
  throw ValidationError("unknown mode '" + std::string(s) + "' (expected weighted or conditional)");
}

inline FastPath parse_fast_path(std::string_view s) {
  if (s == "auto") return FastPath::automatic;
  if (s == "on") return FastPath::on;
  if (s == "off") return FastPath::off;
  throw ValidationError("unknown fast-path setting '" + std::string(s) + "' (expected auto, on or off)");
}

struct EstimatorConfig {
  Distance distance = Distance::l2;
  MeanMode mode = MeanMode::weighted;
  /// Rescale importance weights to sum to one inside each cell. When false the
  /// raw weights p(g_rest) / (N p(g)) are used as-is.
  bool self_normalize = true;
  /// Inner cells with fewer rows are left out of the supremum.
  std::size_t min_cell_size = 1;
  /// Map reported scores into [0, 1].
  bool clamp = false;
  /// A feature set is inactive when its normalizer is at most
  /// activity_threshold * max |code| over its columns.
  double activity_threshold = 1e-8;
  FastPath fast_path = FastPath::automatic;
  unsigned workers = 1;
  VisitCounter* visits = nullptr;
};

/// Estimate of E[Z_L | do(G_I <- g_I)] (reference) or
/// E[Z_L | do(G_I <- g_I, G_J <- g_J)] (one inner cell).
struct InterventionalMean {
  std::vector<double> value;
  std::vector<std::int32_t> target_key;
  std::vector<std::int32_t> nuisance_key;
  std::size_t samples = 0;
  double effective_sample_size = 0.0;
};

/// Selects an outer cell k, or the inner cell (k, l) when `inner` is set.
struct CellRef {
  std::size_t outer = 0;
  std::optional<std::size_t> inner;
};

namespace detail {

// Per-row raw importance weights. reference[r] adjusts for do(G_I) alone,
// cell[r] for do(G_I, G_J).
struct RowWeights {
  std::vector<double> reference;
  std::vector<double> cell;
};

inline RowWeights make_weights(const FrequencyTable& f) {
  const std::size_t n = f.rows();
  const double nd = static_cast<double>(n);
  RowWeights w;
  w.reference.resize(n);
  w.cell.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double full = static_cast<double>(f.full_count(r));
    w.reference[r] = static_cast<double>(f.target_residual_count(r)) / (nd * full);
    w.cell[r] = static_cast<double>(f.residual_count(r)) / (nd * full);
  }
  return w;
}

struct MeanStats {
  double total_weight = 0.0;
  double effective_sample_size = 0.0;
};

// Writes the (weighted) mean of codes[rows, features] into `out`.
inline MeanStats accumulate_mean(const LabeledDataset& d, std::span<const std::size_t> rows,
                                 std::span<const std::size_t> features, const double* weights,
                                 bool self_normalize, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  MeanStats s;
  double sum_sq = 0.0;
  for (auto r : rows) {
    const double w = weights ? weights[r] : 1.0;
    s.total_weight += w;
    sum_sq += w * w;
    for (std::size_t a = 0; a < features.size(); ++a) out[a] += w * d.code(r, features[a]);
  }
  if (!(s.total_weight > 0.0))
    throw InternalError("cell with zero total weight; frequency table inconsistent with partition");
  if (!weights || self_normalize)
    for (auto& v : out) v /= s.total_weight;
  s.effective_sample_size = s.total_weight * s.total_weight / sum_sq;
  return s;
}

inline std::vector<std::size_t> all_factors(const LabeledDataset& d) {
  std::vector<std::size_t> out(d.factor_count());
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

inline double activity_bound(const LabeledDataset& d, std::span<const std::size_t> features,
                             const EstimatorConfig& cfg) {
  double m = 0.0;
  for (auto l : features) m = std::max(m, d.max_abs_code(l));
  return cfg.activity_threshold * m;
}

}  // namespace detail

inline InterventionalMean interventional_mean(const LabeledDataset& d, const PartitionTable& parts,
                                              const FrequencyTable* freqs, const IndexSpec& spec,
                                              CellRef cell, const EstimatorConfig& cfg) {
  if (cell.outer >= parts.outer_count()) throw ValidationError("outer cell index out of range");
  if (cell.inner && *cell.inner >= parts.inner_count(cell.outer))
    throw ValidationError("inner cell index out of range");
  if (cfg.mode == MeanMode::weighted && (freqs == nullptr || freqs->rows() != d.rows()))
    throw ValidationError("weighted mode needs a frequency table for this dataset");

  const auto rows = cell.inner ? parts.inner_rows(cell.outer, *cell.inner) : parts.outer_rows(cell.outer);
  std::optional<detail::RowWeights> weights;
  const double* w = nullptr;
  if (cfg.mode == MeanMode::weighted) {
    weights = detail::make_weights(*freqs);
    w = cell.inner ? weights->cell.data() : weights->reference.data();
  }
  InterventionalMean m;
  m.value.resize(spec.features.size());
  const auto stats = detail::accumulate_mean(d, rows, spec.features, w, cfg.self_normalize, m.value);
  const auto ok = parts.outer_key(cell.outer);
  m.target_key.assign(ok.begin(), ok.end());
  if (cell.inner) {
    const auto ik = parts.inner_key(cell.outer, *cell.inner);
    m.nuisance_key.assign(ik.begin(), ik.end());
  }
  m.samples = rows.size();
  m.effective_sample_size = stats.effective_sample_size;
  return m;
}

/// Post-interventional disagreement between two mean encodings.
inline double pida(const InterventionalMean& reference, const InterventionalMean& intervened,
                   Distance dist = Distance::l2) {
  return distance(reference.value, intervened.value, dist);
}

struct EmpidaResult {
  double value = 0.0;
  /// Worst-case disagreement per outer cell, in sorted key order.
  std::vector<double> mpida;
  /// Inner cells skipped for being below min_cell_size.
  std::size_t excluded_cells = 0;
};

/// EMPIDA over a prebuilt partition. `freqs` may be null in conditional mode.
inline EmpidaResult empida_on(const LabeledDataset& d, const PartitionTable& parts,
                              const FrequencyTable* freqs, std::span<const std::size_t> features,
                              const EstimatorConfig& cfg) {
  std::optional<detail::RowWeights> weights;
  if (cfg.mode == MeanMode::weighted) {
    if (freqs == nullptr) throw ValidationError("weighted mode needs a frequency table");
    weights = detail::make_weights(*freqs);
  }
  const double* ref_w = weights ? weights->reference.data() : nullptr;
  const double* cell_w = weights ? weights->cell.data() : nullptr;

  const std::size_t outer = parts.outer_count();
  EmpidaResult res;
  res.mpida.assign(outer, 0.0);
  std::vector<std::size_t> excluded(outer, 0);
  parallel_for(outer, cfg.workers, [&](std::size_t k) {
    std::vector<double> reference(features.size()), intervened(features.size());
    detail::accumulate_mean(d, parts.outer_rows(k), features, ref_w, cfg.self_normalize, reference);
    double worst = 0.0;
    for (std::size_t l = 0; l < parts.inner_count(k); ++l) {
      const auto rows = parts.inner_rows(k, l);
      if (rows.size() < cfg.min_cell_size) {
        ++excluded[k];
        continue;
      }
      detail::accumulate_mean(d, rows, features, cell_w, cfg.self_normalize, intervened);
      worst = std::max(worst, distance(reference, intervened, cfg.distance));
    }
    res.mpida[k] = worst;
  });
  if (cfg.visits) cfg.visits->add(2 * parts.rows());

  const double n = static_cast<double>(parts.rows());
  for (std::size_t k = 0; k < outer; ++k) {
    res.value += static_cast<double>(parts.outer_rows(k).size()) / n * res.mpida[k];
    res.excluded_cells += excluded[k];
  }
  return res;
}

inline EmpidaResult empida_detailed(const LabeledDataset& d, const IndexSpec& spec,
                                    const EstimatorConfig& cfg = {}) {
  validate(spec, d);
  const auto parts = build_partition(d, spec, cfg.visits);
  std::optional<FrequencyTable> freqs;
  if (cfg.mode == MeanMode::weighted) freqs = build_frequencies(d, spec, cfg.visits);
  return empida_on(d, parts, freqs ? &*freqs : nullptr, spec.features, cfg);
}

/// Expected maximal post-interventional disagreement EMPIDA(L | I, J).
inline double empida(const LabeledDataset& d, const IndexSpec& spec, const EstimatorConfig& cfg = {}) {
  return empida_detailed(d, spec, cfg).value;
}

/// The normalizer query EMPIDA(L | {}, {0..K-1}).
inline IndexSpec normalizer_spec(const LabeledDataset& d, std::vector<std::size_t> features) {
  return IndexSpec{std::move(features), {}, detail::all_factors(d)};
}

struct IrsResult {
  /// Empty when the feature set is inactive.
  std::optional<double> score;
  double empida = 0.0;
  double normalizer = 0.0;
  bool active = true;
  std::size_t excluded_cells = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline IrsResult finish_irs(double numerator, double normalizer, double bound,
                            const EstimatorConfig& cfg, const std::string& label) {
  IrsResult r;
  r.empida = numerator;
  r.normalizer = normalizer;
  if (normalizer <= bound) {
    r.active = false;
    r.warnings.push_back(label + ": inactive (normalizer " + std::to_string(normalizer) +
                         " below activity threshold)");
    return r;
  }
  double score = 1.0 - numerator / normalizer;
  if (score < 0.0)
    r.warnings.push_back(label + ": IRS " + std::to_string(score) +
                         " is negative; EMPIDA exceeds its normalizer on this sample");
  if (cfg.clamp) score = std::clamp(score, 0.0, 1.0);
  r.score = score;
  return r;
}

inline std::string spec_label(const IndexSpec& s) {
  auto list = [](const std::vector<std::size_t>& v) {
    std::string out = "{";
    for (std::size_t a = 0; a < v.size(); ++a) out += (a ? "," : "") + std::to_string(v[a]);
    return out + "}";
  };
  return "IRS(" + list(s.features) + "|" + list(s.targets) + "," + list(s.nuisance) + ")";
}

}  // namespace detail

/// IRS(L | I, J) = 1 - EMPIDA(L | I, J) / EMPIDA(L | {}, all).
inline IrsResult irs(const LabeledDataset& d, const IndexSpec& spec, const EstimatorConfig& cfg = {}) {
  validate(spec, d);
  const auto num = empida_detailed(d, spec, cfg);
  const auto den = empida_detailed(d, normalizer_spec(d, spec.features), cfg);
  auto r = detail::finish_irs(num.value, den.value, detail::activity_bound(d, spec.features, cfg),
                              cfg, detail::spec_label(spec));
  r.excluded_cells = num.excluded_cells + den.excluded_cells;
  if (r.excluded_cells > 0)
    r.warnings.push_back(std::to_string(r.excluded_cells) + " cell(s) below min_cell_size " +
                         std::to_string(cfg.min_cell_size) + " excluded from the supremum");
  return r;
}

/// Robustness of Z_L against shifts in the domain factors S: IRS(L | all \ S, S).
inline IrsResult domain_shift_score(const LabeledDataset& d, std::vector<std::size_t> features,
                                    const std::vector<std::size_t>& shifted,
                                    const EstimatorConfig& cfg = {}) {
  if (shifted.empty()) throw ValidationError("domain factor set S must not be empty");
  auto targets = complement(d.factor_count(), shifted);
  if (targets.empty())
    throw ValidationError("domain factor set S covers every factor; IRS needs at least one held factor");
  return irs(d, IndexSpec{std::move(features), std::move(targets), shifted}, cfg);
}

/// One row of the dependency matrix with its disentanglement score.
struct FeatureScore {
  std::size_t feature = 0;
  bool active = true;
  std::optional<double> score;
  std::optional<std::size_t> argmax;
  /// Normalizer EMPIDA({l} | {}, all); the feature's weight in the overall score.
  double weight = 0.0;
  /// R_li for every factor i; NaN when inactive.
  std::vector<double> row;
};

/// Result of crossed_fast_path for a single feature.
struct CrossedRow {
  std::size_t feature = 0;
  bool active = true;
  std::optional<double> score;
  std::optional<std::size_t> argmax;
  double normalizer = 0.0;
  std::vector<double> empida;
  std::vector<double> row;
};

namespace detail {

// Partitions for every single-factor query, built once and shared by all features.
struct MatrixPlan {
  PartitionTable normalizer_parts;
  std::optional<FrequencyTable> normalizer_freqs;
  std::vector<PartitionTable> parts;
  std::vector<std::optional<FrequencyTable>> freqs;
};

inline MatrixPlan make_matrix_plan(const LabeledDataset& d, const EstimatorConfig& cfg) {
  if (d.factor_count() < 2)
    throw ValidationError("the dependency matrix needs at least two factors (J would be empty)");
  MatrixPlan p;
  const auto norm = normalizer_spec(d, {});
  p.normalizer_parts = build_partition(d, norm, cfg.visits);
  if (cfg.mode == MeanMode::weighted) p.normalizer_freqs = build_frequencies(d, norm, cfg.visits);
  for (std::size_t i = 0; i < d.factor_count(); ++i) {
    const std::vector<std::size_t> target{i};
    IndexSpec s{{}, target, complement(d.factor_count(), target)};
    p.parts.push_back(build_partition(d, s, cfg.visits));
    p.freqs.push_back(cfg.mode == MeanMode::weighted
                          ? std::optional<FrequencyTable>(build_frequencies(d, s, cfg.visits))
                          : std::nullopt);
  }
  return p;
}

inline FeatureScore score_feature(const LabeledDataset& d, const MatrixPlan& plan, std::size_t l,
                                  const EstimatorConfig& cfg, std::vector<std::string>* warnings) {
  const std::vector<std::size_t> features{l};
  FeatureScore fs;
  fs.feature = l;
  fs.weight = empida_on(d, plan.normalizer_parts,
                        plan.normalizer_freqs ? &*plan.normalizer_freqs : nullptr, features, cfg)
                  .value;
  fs.row.assign(d.factor_count(), std::numeric_limits<double>::quiet_NaN());
  if (fs.weight <= activity_bound(d, features, cfg)) {
    fs.active = false;
    fs.weight = 0.0;
    if (warnings) warnings->push_back("feature " + std::to_string(l) + " is inactive");
    return fs;
  }
  for (std::size_t i = 0; i < d.factor_count(); ++i) {
    const double num =
        empida_on(d, plan.parts[i], plan.freqs[i] ? &*plan.freqs[i] : nullptr, features, cfg).value;
    auto r = finish_irs(num, fs.weight, 0.0, cfg,
                        "R[" + std::to_string(l) + "][" + std::to_string(i) + "]");
    if (warnings) warnings->insert(warnings->end(), r.warnings.begin(), r.warnings.end());
    fs.row[i] = *r.score;
    if (!fs.score || fs.row[i] > *fs.score) {
      fs.score = fs.row[i];
      fs.argmax = i;
    }
  }
  return fs;
}

}  // namespace detail

/// D_l = max_i IRS({l} | {i}, all \ {i}); ties go to the smallest factor index.
inline FeatureScore disentanglement_score(const LabeledDataset& d, std::size_t l,
                                          const EstimatorConfig& cfg = {}) {
  if (l >= d.feature_count())
    throw ValidationError("feature index " + std::to_string(l) + " out of range");
  const auto plan = detail::make_matrix_plan(d, cfg);
  return detail::score_feature(d, plan, l, cfg, nullptr);
}

/// Disentanglement score of a noise-free fully crossed dataset using
/// per-sample deviations: cell means are single samples there.
inline CrossedRow crossed_fast_path(const LabeledDataset& d, std::size_t l,
                                    const EstimatorConfig& cfg = {}) {
  if (l >= d.feature_count())
    throw ValidationError("feature index " + std::to_string(l) + " out of range");
  if (!is_fully_crossed(d))
    throw ValidationError("crossed fast path requires a fully crossed dataset");
  const std::size_t n = d.rows();
  const std::size_t k_count = d.factor_count();
  auto dev = [&](double a, double b) {
    const double x[1] = {a}, y[1] = {b};
    return distance(x, y, cfg.distance);
  };

  CrossedRow out;
  out.feature = l;
  double mean = 0.0;
  for (std::size_t r = 0; r < n; ++r) mean += d.code(r, l);
  mean /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) out.normalizer = std::max(out.normalizer, dev(mean, d.code(r, l)));
  if (cfg.visits) cfg.visits->add(2 * n);
  out.row.assign(k_count, std::numeric_limits<double>::quiet_NaN());
  out.empida.assign(k_count, 0.0);
  const std::vector<std::size_t> features{l};
  if (out.normalizer <= detail::activity_bound(d, features, cfg)) {
    out.active = false;
    return out;
  }
  for (std::size_t i = 0; i < k_count; ++i) {
    const auto card = static_cast<std::size_t>(d.cardinalities()[i]);
    std::vector<double> sum(card, 0.0), sup(card, 0.0);
    std::vector<std::size_t> count(card, 0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto k = static_cast<std::size_t>(d.factor(r, i));
      sum[k] += d.code(r, l);
      ++count[k];
    }
    for (std::size_t k = 0; k < card; ++k) sum[k] /= static_cast<double>(count[k]);
    for (std::size_t r = 0; r < n; ++r) {
      const auto k = static_cast<std::size_t>(d.factor(r, i));
      sup[k] = std::max(sup[k], dev(sum[k], d.code(r, l)));
    }
    if (cfg.visits) cfg.visits->add(2 * n);
    double e = 0.0;
    for (std::size_t k = 0; k < card; ++k) e += sup[k];
    out.empida[i] = e / static_cast<double>(card);
    double score = 1.0 - out.empida[i] / out.normalizer;
    if (cfg.clamp) score = std::clamp(score, 0.0, 1.0);
    out.row[i] = score;
    if (!out.score || score > *out.score) {
      out.score = score;
      out.argmax = i;
    }
  }
  return out;
}

/// Full K' x K dependency matrix with per-feature scores and their weighted average.
struct IrsReport {
  std::size_t feature_count = 0;
  std::size_t factor_count = 0;
  /// Row-major R; rows of inactive features hold NaN.
  std::vector<double> matrix;
  std::vector<FeatureScore> per_feature;
  /// Sum_l w_l D_l / Sum_l w_l over active features; empty when none is active.
  std::optional<double> overall;
  bool fast_path_used = false;
  EstimatorConfig config;
  std::vector<std::string> warnings;

  double at(std::size_t l, std::size_t i) const { return matrix[l * factor_count + i]; }
};

inline IrsReport dependency_matrix(const LabeledDataset& d, const EstimatorConfig& cfg = {}) {
  IrsReport rep;
  rep.feature_count = d.feature_count();
  rep.factor_count = d.factor_count();
  rep.config = cfg;
  rep.config.visits = nullptr;

  bool fast = false;
  if (cfg.fast_path != FastPath::off) {
    const bool crossed = is_fully_crossed(d);
    if (cfg.fast_path == FastPath::on && !crossed)
      throw ValidationError("--fast-path on requires a fully crossed dataset");
    fast = crossed;
  }
  rep.fast_path_used = fast;

  if (fast) {
    if (d.factor_count() < 2)
      throw ValidationError("the dependency matrix needs at least two factors (J would be empty)");
    for (std::size_t l = 0; l < d.feature_count(); ++l) {
      const auto c = crossed_fast_path(d, l, cfg);
      FeatureScore fs{l, c.active, c.score, c.argmax, c.active ? c.normalizer : 0.0, c.row};
      if (!c.active) rep.warnings.push_back("feature " + std::to_string(l) + " is inactive");
      for (std::size_t i = 0; i < c.row.size(); ++i)
        if (c.active && c.row[i] < 0.0)
          rep.warnings.push_back("R[" + std::to_string(l) + "][" + std::to_string(i) +
                                 "] is negative");
      rep.per_feature.push_back(std::move(fs));
    }
  } else {
    const auto plan = detail::make_matrix_plan(d, cfg);
    for (std::size_t l = 0; l < d.feature_count(); ++l)
      rep.per_feature.push_back(detail::score_feature(d, plan, l, cfg, &rep.warnings));
  }

  double num = 0.0, den = 0.0;
  for (const auto& fs : rep.per_feature) {
    rep.matrix.insert(rep.matrix.end(), fs.row.begin(), fs.row.end());
    if (fs.active) {
      num += fs.weight * *fs.score;
      den += fs.weight;
    }
  }
  if (den > 0.0)
    rep.overall = num / den;
  else
    rep.warnings.push_back("all features are inactive; no overall score");
  return rep;
}

}  // namespace irs
