#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "irs/dataset.hpp"
#include "irs/error.hpp"

namespace irs {

/// Equal-width buckets over [min, max] of `column`; a value on an interior
/// edge goes to the lower bucket. A constant column maps to bucket 0.
inline std::vector<std::int32_t> bucketize(std::span<const double> column, int buckets) {
  if (buckets < 2) throw ValidationError("bucket count must be >= 2");
  std::vector<std::int32_t> out(column.size(), 0);
  if (column.empty()) return out;
  auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return out;
  const double width = (hi - lo) / buckets;
  for (std::size_t r = 0; r < column.size(); ++r) {
    const double b = std::ceil((column[r] - lo) / width) - 1.0;
    out[r] = static_cast<std::int32_t>(std::clamp(b, 0.0, static_cast<double>(buckets - 1)));
  }
  return out;
}

/// Discrete mutual information in nats of a joint count table (rows x cols, row-major).
inline double mutual_information(std::span<const std::size_t> joint, std::size_t rows,
                                 std::size_t cols) {
  if (joint.size() != rows * cols) throw ValidationError("joint table has the wrong size");
  std::vector<double> pr(rows, 0.0), pc(cols, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < rows; ++a)
    for (std::size_t b = 0; b < cols; ++b) {
      const auto c = static_cast<double>(joint[a * cols + b]);
      pr[a] += c;
      pc[b] += c;
      total += c;
    }
  if (total <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t a = 0; a < rows; ++a)
    for (std::size_t b = 0; b < cols; ++b) {
      const auto c = static_cast<double>(joint[a * cols + b]);
      if (c == 0.0) continue;
      mi += c / total * std::log(c * total / (pr[a] * pc[b]));
    }
  return std::max(mi, 0.0);
}

/// MI between each bucketized latent column and each factor.
struct MiMatrix {
  std::size_t feature_count = 0;
  std::size_t factor_count = 0;
  int buckets = 20;
  std::vector<double> values;

  double at(std::size_t l, std::size_t i) const { return values[l * factor_count + i]; }
};

struct MiScores {
  std::vector<double> per_feature;
  std::vector<std::size_t> argmax;
  double average = 0.0;
};

struct MiReport {
  MiMatrix matrix;
  MiScores scores;
};

inline MiMatrix mi_matrix(const LabeledDataset& d, int buckets = 20) {
  MiMatrix m;
  m.feature_count = d.feature_count();
  m.factor_count = d.factor_count();
  m.buckets = buckets;
  m.values.assign(m.feature_count * m.factor_count, 0.0);
  const auto b_count = static_cast<std::size_t>(buckets);
  std::vector<double> column(d.rows());
  for (std::size_t l = 0; l < d.feature_count(); ++l) {
    for (std::size_t r = 0; r < d.rows(); ++r) column[r] = d.code(r, l);
    const auto z = bucketize(column, buckets);
    for (std::size_t i = 0; i < d.factor_count(); ++i) {
      const auto card = static_cast<std::size_t>(d.cardinalities()[i]);
      std::vector<std::size_t> joint(b_count * card, 0);
      for (std::size_t r = 0; r < d.rows(); ++r)
        ++joint[static_cast<std::size_t>(z[r]) * card + static_cast<std::size_t>(d.factor(r, i))];
      m.values[l * m.factor_count + i] = mutual_information(joint, b_count, card);
    }
  }
  return m;
}

/// Per row: 1 - (squared mass off the largest entry) / (total squared mass);
/// an all-zero row scores 0. The average is unweighted.
inline MiScores mi_disentanglement(const MiMatrix& m) {
  MiScores s;
  for (std::size_t l = 0; l < m.feature_count; ++l) {
    std::size_t best = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < m.factor_count; ++i) {
      total += m.at(l, i) * m.at(l, i);
      if (m.at(l, i) > m.at(l, best)) best = i;
    }
    double score = 0.0;
    if (total > 0.0) {
      double off = 0.0;
      for (std::size_t i = 0; i < m.factor_count; ++i)
        if (i != best) off += m.at(l, i) * m.at(l, i);
      score = 1.0 - off / total;
    }
    s.per_feature.push_back(score);
    s.argmax.push_back(best);
  }
  if (!s.per_feature.empty()) {
    for (double v : s.per_feature) s.average += v;
    s.average /= static_cast<double>(s.per_feature.size());
  }
  return s;
}

inline MiReport mi_report(const LabeledDataset& d, int buckets = 20) {
  MiReport r;
  r.matrix = mi_matrix(d, buckets);
  r.scores = mi_disentanglement(r.matrix);
  return r;
}

}  // namespace irs
