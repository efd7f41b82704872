#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irs/error.hpp"

namespace irs {

/// Untyped numeric table as read from CSV or NPY, row-major.
struct RawTable {
  std::vector<std::string> names;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
    return out;
  }
};

enum class BinStrategy { discrete, equal_width, quantile };

inline std::string_view to_string(BinStrategy s) {
  switch (s) {
    case BinStrategy::discrete: return "discrete";
    case BinStrategy::equal_width: return "equal_width";
    case BinStrategy::quantile: return "quantile";
  }
  return "?";
}

inline BinStrategy parse_bin_strategy(std::string_view s) {
  if (s == "discrete") return BinStrategy::discrete;
  if (s == "equal_width") return BinStrategy::equal_width;
  if (s == "quantile") return BinStrategy::quantile;
  throw ValidationError("unknown discretization strategy '" + std::string(s) + "'");
}

struct FactorPlan {
  std::string name;
  BinStrategy strategy = BinStrategy::quantile;
  int bins = 10;
};

/// How each factor column becomes a finite alphabet. Columns not named in
/// `factors` are kept as-is when integral and binned with `continuous_default`
/// otherwise.
struct DiscretizationPlan {
  std::vector<FactorPlan> factors;
  FactorPlan continuous_default{};

  const FactorPlan* find(std::string_view name) const {
    for (const auto& f : factors)
      if (f.name == name) return &f;
    return nullptr;
  }
};

/// What discretization did to one factor column.
///
/// `edges` are the interior thresholds: a value v lands in the first bin b
/// with v <= edges[b] (ties go to the lower bin), or in the last bin.
/// `levels[k]` is the raw value (discrete) or raw bin number (binned) that
/// canonical realization k stands for.
struct FactorBinning {
  BinStrategy strategy = BinStrategy::discrete;
  int bins = 0;
  std::vector<double> edges;
  std::vector<double> levels;
};

struct DiscretizedColumn {
  std::vector<std::int32_t> indices;
  FactorBinning binning;
};

namespace detail {

inline std::vector<std::int32_t> assign_by_edges(std::span<const double> values,
                                                 const std::vector<double>& edges) {
  std::vector<std::int32_t> out(values.size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    auto it = std::lower_bound(edges.begin(), edges.end(), values[r]);
    out[r] = static_cast<std::int32_t>(it - edges.begin());
  }
  return out;
}

// Renumbers raw bin ids to 0..used-1 in increasing order; returns the raw ids kept.
inline std::vector<double> compact(std::vector<std::int32_t>& ids, int raw_count) {
  std::vector<std::int32_t> remap(static_cast<std::size_t>(raw_count), -1);
  for (auto id : ids) remap[static_cast<std::size_t>(id)] = 0;
  std::vector<double> levels;
  std::int32_t next = 0;
  for (int b = 0; b < raw_count; ++b) {
    if (remap[static_cast<std::size_t>(b)] == 0) {
      remap[static_cast<std::size_t>(b)] = next++;
      levels.push_back(b);
    }
  }
  for (auto& id : ids) id = remap[static_cast<std::size_t>(id)];
  return levels;
}

inline bool is_integral(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v) && v == std::floor(v); });
}

}  // namespace detail

/// Maps each distinct value to its rank among the sorted distinct values.
inline DiscretizedColumn canonicalize(std::span<const double> values) {
  std::vector<double> levels(values.begin(), values.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  DiscretizedColumn out;
  out.indices.resize(values.size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    out.indices[r] = static_cast<std::int32_t>(
        std::lower_bound(levels.begin(), levels.end(), values[r]) - levels.begin());
  }
  out.binning.strategy = BinStrategy::discrete;
  out.binning.bins = static_cast<int>(levels.size());
  out.binning.levels = std::move(levels);
  return out;
}

/// Equal-width bins over [min, max]. Empty bins are dropped so the result is tight.
inline DiscretizedColumn equal_width_bins(std::span<const double> values, int bins) {
  if (bins < 2) throw ValidationError("equal_width: bin count must be >= 2");
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  DiscretizedColumn out;
  out.binning.strategy = BinStrategy::equal_width;
  out.binning.bins = bins;
  const double width = (hi - lo) / bins;
  for (int b = 1; b < bins; ++b) out.binning.edges.push_back(lo + b * width);
  out.binning.edges.erase(std::unique(out.binning.edges.begin(), out.binning.edges.end()),
                          out.binning.edges.end());
  out.indices = detail::assign_by_edges(values, out.binning.edges);
  out.binning.levels =
      detail::compact(out.indices, static_cast<int>(out.binning.edges.size()) + 1);
  return out;
}

/// Equal-mass bins. Cut points are placed on distinct values so that, given at
/// least `bins` distinct values, every bin receives at least one of them.
inline DiscretizedColumn quantile_bins(std::span<const double> values, int bins) {
  if (bins < 2) throw ValidationError("quantile: bin count must be >= 2");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  std::vector<std::size_t> cumulative;  // rows with value <= distinct[j]
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    if (distinct.empty() || sorted[r] != distinct.back()) {
      distinct.push_back(sorted[r]);
      cumulative.push_back(0);
    }
    cumulative.back() = r + 1;
  }
  const std::size_t n = sorted.size();
  const std::size_t d = distinct.size();
  const auto b_count = static_cast<std::size_t>(bins);

  DiscretizedColumn out;
  out.binning.strategy = BinStrategy::quantile;
  out.binning.bins = bins;
  if (d <= b_count) {
    out.binning.edges.assign(distinct.begin(), distinct.end() - 1);
  } else {
    std::size_t prev = 0;  // 1-based index of the previous cut, 0 = none
    for (std::size_t b = 1; b < b_count; ++b) {
      std::size_t j = 1;
      while (j < d && cumulative[j - 1] * b_count < b * n) ++j;
      j = std::max(j, prev + 1);
      j = std::min(j, d - (b_count - b));
      out.binning.edges.push_back(distinct[j - 1]);
      prev = j;
    }
  }
  out.indices = detail::assign_by_edges(values, out.binning.edges);
  out.binning.levels =
      detail::compact(out.indices, static_cast<int>(out.binning.edges.size()) + 1);
  return out;
}

inline DiscretizedColumn discretize(std::span<const double> values, const FactorPlan& plan) {
  switch (plan.strategy) {
    case BinStrategy::discrete: return canonicalize(values);
    case BinStrategy::equal_width: return equal_width_bins(values, plan.bins);
    case BinStrategy::quantile: return quantile_bins(values, plan.bins);
  }
  throw ValidationError("unknown discretization strategy");
}

/// N rows of (code vector, discrete factor vector). Immutable once built.
class LabeledDataset {
 public:
  /// `factors` must already be canonical: column i takes every value in
  /// [0, card_i) and at least two of them.
  LabeledDataset(std::size_t rows, std::size_t feature_count, std::vector<double> codes,
                 std::size_t factor_count, std::vector<std::int32_t> factors,
                 std::vector<std::string> feature_names = {},
                 std::vector<std::string> factor_names = {},
                 std::vector<FactorBinning> binning = {})
      : rows_(rows),
        feature_count_(feature_count),
        factor_count_(factor_count),
        codes_(std::move(codes)),
        factors_(std::move(factors)),
        feature_names_(std::move(feature_names)),
        factor_names_(std::move(factor_names)),
        binning_(std::move(binning)) {
    validate();
  }

  std::size_t rows() const { return rows_; }
  std::size_t feature_count() const { return feature_count_; }
  std::size_t factor_count() const { return factor_count_; }

  double code(std::size_t r, std::size_t l) const { return codes_[r * feature_count_ + l]; }
  std::int32_t factor(std::size_t r, std::size_t i) const {
    return factors_[r * factor_count_ + i];
  }
  std::span<const double> code_row(std::size_t r) const {
    return {codes_.data() + r * feature_count_, feature_count_};
  }
  std::span<const std::int32_t> factor_row(std::size_t r) const {
    return {factors_.data() + r * factor_count_, factor_count_};
  }

  std::span<const double> codes() const { return codes_; }
  std::span<const std::int32_t> factors() const { return factors_; }
  const std::vector<std::int32_t>& cardinalities() const { return cardinalities_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& factor_names() const { return factor_names_; }
  const std::vector<FactorBinning>& binning() const { return binning_; }

  double max_abs_code(std::size_t l) const {
    double m = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) m = std::max(m, std::abs(code(r, l)));
    return m;
  }

 private:
  void validate() {
    if (rows_ == 0) throw ValidationError("dataset must have at least one row");
    if (feature_count_ == 0) throw ValidationError("dataset has no code columns");
    if (factor_count_ == 0) throw ValidationError("dataset has no factor columns");
    if (codes_.size() != rows_ * feature_count_)
      throw ValidationError("code matrix size does not match rows x features");
    if (factors_.size() != rows_ * factor_count_)
      throw ValidationError("factor matrix size does not match rows x factors");
    if (!feature_names_.empty() && feature_names_.size() != feature_count_)
      throw ValidationError("feature name count does not match code columns");
    if (!factor_names_.empty() && factor_names_.size() != factor_count_)
      throw ValidationError("factor name count does not match factor columns");
    for (std::size_t k = 0; k < codes_.size(); ++k) {
      if (!std::isfinite(codes_[k])) {
        throw ValidationError("non-finite code value at row " +
                              std::to_string(k / feature_count_) + ", column " +
                              std::to_string(k % feature_count_));
      }
    }
    cardinalities_.assign(factor_count_, 0);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t i = 0; i < factor_count_; ++i) {
        const auto v = factor(r, i);
        if (v < 0) throw ValidationError("negative factor realization in column " + std::to_string(i));
        cardinalities_[i] = std::max(cardinalities_[i], v + 1);
      }
    }
    for (std::size_t i = 0; i < factor_count_; ++i) {
      std::vector<bool> seen(static_cast<std::size_t>(cardinalities_[i]), false);
      for (std::size_t r = 0; r < rows_; ++r) seen[static_cast<std::size_t>(factor(r, i))] = true;
      if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ValidationError("factor column " + std::to_string(i) +
                              " is not canonical: some realization below its maximum never occurs");
      if (cardinalities_[i] < 2)
        throw ValidationError("factor column " + column_label(i) +
                              " is constant; a constant factor admits no intervention contrast");
    }
    if (binning_.empty()) {
      binning_.resize(factor_count_);
      for (std::size_t i = 0; i < factor_count_; ++i) {
        binning_[i].bins = cardinalities_[i];
        for (std::int32_t v = 0; v < cardinalities_[i]; ++v) binning_[i].levels.push_back(v);
      }
    } else if (binning_.size() != factor_count_) {
      throw ValidationError("binning record count does not match factor columns");
    }
  }

  std::string column_label(std::size_t i) const {
    return factor_names_.empty() ? std::to_string(i) : "'" + factor_names_[i] + "'";
  }

  std::size_t rows_;
  std::size_t feature_count_;
  std::size_t factor_count_;
  std::vector<double> codes_;
  std::vector<std::int32_t> factors_;
  std::vector<std::int32_t> cardinalities_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> factor_names_;
  std::vector<FactorBinning> binning_;
};

/// Validates both tables and discretizes the factor columns per `plan`.
inline LabeledDataset ingest(const RawTable& codes, const RawTable& factors,
                             const DiscretizationPlan& plan = {}) {
  if (codes.rows != factors.rows) {
    throw ValidationError("row-count mismatch: codes have " + std::to_string(codes.rows) +
                          " rows, factors have " + std::to_string(factors.rows));
  }
  if (codes.values.size() != codes.rows * codes.cols ||
      factors.values.size() != factors.rows * factors.cols)
    throw ValidationError("table storage does not match its shape");

  const std::size_t n = factors.rows;
  std::vector<std::int32_t> indices(n * factors.cols);
  std::vector<FactorBinning> binning;
  for (std::size_t c = 0; c < factors.cols; ++c) {
    const std::string name = c < factors.names.size() ? factors.names[c] : std::string{};
    const auto column = factors.column(c);
    for (std::size_t r = 0; r < n; ++r) {
      if (!std::isfinite(column[r]))
        throw ValidationError("non-finite factor value in column '" + name + "', row " +
                              std::to_string(r));
    }
    if (std::adjacent_find(column.begin(), column.end(), std::not_equal_to<>()) == column.end())
      throw ValidationError("factor column '" + name +
                            "' has a single distinct value; a constant factor admits no "
                            "intervention contrast");
    const FactorPlan* chosen = plan.find(name);
    FactorPlan fallback{name, BinStrategy::discrete, 0};
    if (chosen == nullptr) {
      if (!detail::is_integral(column)) fallback = plan.continuous_default;
      chosen = &fallback;
    }
    auto disc = discretize(column, *chosen);
    for (std::size_t r = 0; r < n; ++r) indices[r * factors.cols + c] = disc.indices[r];
    binning.push_back(std::move(disc.binning));
  }
  for (const auto& fp : plan.factors) {
    if (std::find(factors.names.begin(), factors.names.end(), fp.name) == factors.names.end())
      throw ValidationError("discretization plan names unknown factor column '" + fp.name + "'");
  }
  return LabeledDataset(n, codes.cols, codes.values, factors.cols, std::move(indices),
                        codes.names, factors.names, std::move(binning));
}

/// True iff every full factor tuple occurs exactly once and N equals the grid size.
inline bool is_fully_crossed(const LabeledDataset& d) {
  std::uint64_t product = 1;
  for (auto c : d.cardinalities()) {
    const auto card = static_cast<std::uint64_t>(c);
    if (product > d.rows() / card + 1) return false;
    product *= card;
  }
  if (product != d.rows()) return false;
  std::vector<bool> seen(d.rows(), false);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < d.factor_count(); ++i)
      key = key * static_cast<std::uint64_t>(d.cardinalities()[i]) +
            static_cast<std::uint64_t>(d.factor(r, i));
    if (seen[key]) return false;
    seen[key] = true;
  }
  return true;
}

}  // namespace irs
