#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "irs/dataset.hpp"
#include "irs/estimator.hpp"
#include "irs/partition.hpp"

namespace irs {

/// Observational mean of Z_l for one realization of G_{i*}, with the
/// per-cell standard deviation as its band.
struct ConditionalPoint {
  std::int32_t realization = 0;
  double level = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;
  std::size_t count = 0;
};

struct CurvePoint {
  std::int32_t realization = 0;
  double level = 0.0;
  double mean = 0.0;
  std::size_t samples = 0;
};

/// E[Z_l | g_{i*}, do(G_j <- g_j)] as a function of g_j, for one g_{i*}.
struct Curve {
  std::int32_t anchor = 0;
  double anchor_level = 0.0;
  std::vector<CurvePoint> points;
};

struct OffColumn {
  std::size_t factor = 0;
  std::vector<Curve> curves;
  /// Largest (max - min) over the curves; 0 when every curve is horizontal.
  double flatness = 0.0;
};

struct VizCurveSet {
  std::size_t feature = 0;
  bool active = true;
  std::string status = "ok";
  std::optional<std::size_t> i_star;
  std::optional<double> score;
  std::vector<ConditionalPoint> diagonal;
  std::vector<OffColumn> columns;
};

namespace viz_detail {

inline double level_of(const LabeledDataset& d, std::size_t factor, std::int32_t k) {
  if (factor < d.binning().size() && static_cast<std::size_t>(k) < d.binning()[factor].levels.size())
    return d.binning()[factor].levels[static_cast<std::size_t>(k)];
  return static_cast<double>(k);
}

}  // namespace viz_detail

inline VizCurveSet viz_curves(const LabeledDataset& d, std::size_t l, const EstimatorConfig& cfg = {}) {
  if (l >= d.feature_count())
    throw ValidationError("feature index " + std::to_string(l) + " out of range (K' = " +
                          std::to_string(d.feature_count()) + ")");
  VizCurveSet out;
  out.feature = l;
  const auto fs = disentanglement_score(d, l, cfg);
  if (!fs.active) {
    out.active = false;
    out.status = "inactive";
    return out;
  }
  const std::size_t i_star = *fs.argmax;
  out.i_star = i_star;
  out.score = fs.score;

  const auto card = static_cast<std::size_t>(d.cardinalities()[i_star]);
  std::vector<double> sum(card, 0.0), sq(card, 0.0);
  std::vector<std::size_t> count(card, 0);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const auto k = static_cast<std::size_t>(d.factor(r, i_star));
    sum[k] += d.code(r, l);
    ++count[k];
  }
  for (std::size_t k = 0; k < card; ++k) sum[k] /= static_cast<double>(count[k]);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const auto k = static_cast<std::size_t>(d.factor(r, i_star));
    sq[k] += (d.code(r, l) - sum[k]) * (d.code(r, l) - sum[k]);
  }
  for (std::size_t k = 0; k < card; ++k) {
    const auto kk = static_cast<std::int32_t>(k);
    out.diagonal.push_back({kk, viz_detail::level_of(d, i_star, kk), sum[k],
                            std::sqrt(sq[k] / static_cast<double>(count[k])), count[k]});
  }

  const std::vector<std::size_t> features{l};
  for (std::size_t j = 0; j < d.factor_count(); ++j) {
    if (j == i_star) continue;
    const IndexSpec spec{features, {i_star}, {j}};
    const auto parts = build_partition(d, spec, cfg.visits);
    std::optional<FrequencyTable> freqs;
    if (cfg.mode == MeanMode::weighted) freqs = build_frequencies(d, spec, cfg.visits);
    OffColumn col;
    col.factor = j;
    for (std::size_t k = 0; k < parts.outer_count(); ++k) {
      Curve c;
      c.anchor = parts.outer_key(k)[0];
      c.anchor_level = viz_detail::level_of(d, i_star, c.anchor);
      double lo = 0.0, hi = 0.0;
      for (std::size_t m = 0; m < parts.inner_count(k); ++m) {
        const auto mean = interventional_mean(d, parts, freqs ? &*freqs : nullptr, spec, CellRef{k, m}, cfg);
        const auto g = parts.inner_key(k, m)[0];
        c.points.push_back({g, viz_detail::level_of(d, j, g), mean.value[0], mean.samples});
        lo = m == 0 ? mean.value[0] : std::min(lo, mean.value[0]);
        hi = m == 0 ? mean.value[0] : std::max(hi, mean.value[0]);
      }
      col.flatness = std::max(col.flatness, hi - lo);
      col.curves.push_back(std::move(c));
    }
    out.columns.push_back(std::move(col));
  }
  return out;
}

}  // namespace irs
