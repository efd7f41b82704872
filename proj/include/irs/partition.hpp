#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "irs/dataset.hpp"
#include "irs/error.hpp"

namespace irs {

/// The (L, I, J) triple of one query: latent features, factors held at a
/// realization (targets) and factors intervened on as nuisance.
struct IndexSpec {
  std::vector<std::size_t> features;
  std::vector<std::size_t> targets;
  std::vector<std::size_t> nuisance;
};

/// Instrumentation hook: counts how often any row is read.
struct VisitCounter {
  std::size_t row_visits = 0;
  void add(std::size_t n) { row_visits += n; }
};

namespace detail {

inline void check_index_set(const std::vector<std::size_t>& set, std::size_t bound,
                            const char* what) {
  for (std::size_t a = 0; a < set.size(); ++a) {
    if (set[a] >= bound)
      throw ValidationError(std::string(what) + " index " + std::to_string(set[a]) +
                            " out of range (have " + std::to_string(bound) + ")");
    for (std::size_t b = 0; b < a; ++b)
      if (set[a] == set[b])
        throw ValidationError(std::string(what) + " index " + std::to_string(set[a]) +
                              " listed twice");
  }
}

}  // namespace detail

/// Throws ValidationError unless `spec` is well-formed against `d`.
inline void validate(const IndexSpec& spec, const LabeledDataset& d, bool require_features = true) {
  detail::check_index_set(spec.features, d.feature_count(), "feature");
  detail::check_index_set(spec.targets, d.factor_count(), "target factor");
  detail::check_index_set(spec.nuisance, d.factor_count(), "nuisance factor");
  if (require_features && spec.features.empty())
    throw ValidationError("feature set L must not be empty");
  if (spec.nuisance.empty()) throw ValidationError("nuisance factor set J must not be empty");
  for (auto i : spec.targets)
    if (std::find(spec.nuisance.begin(), spec.nuisance.end(), i) != spec.nuisance.end())
      throw ValidationError("factor " + std::to_string(i) + " is in both I and J");
}

/// Factors in {0..K-1} not contained in `a` or `b`, ascending.
inline std::vector<std::size_t> complement(std::size_t factor_count,
                                           std::span<const std::size_t> a,
                                           std::span<const std::size_t> b = {}) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < factor_count; ++i)
    if (std::find(a.begin(), a.end(), i) == a.end() && std::find(b.begin(), b.end(), i) == b.end())
      out.push_back(i);
  return out;
}

/// Dense per-row ids for the sub-tuple g_S, with occurrence counts.
/// Ids are assigned in order of first appearance.
struct TupleCodes {
  std::vector<std::uint32_t> code;
  std::vector<std::size_t> count;
  std::vector<std::size_t> exemplar;

  std::size_t distinct() const { return count.size(); }
};

inline TupleCodes encode_tuples(const LabeledDataset& d, std::span<const std::size_t> factors,
                                VisitCounter* visits = nullptr) {
  const std::size_t n = d.rows();
  TupleCodes out;
  out.code.resize(n);
  if (visits) visits->add(n);

  auto assign = [&](std::size_t r, std::uint32_t id) {
    if (id == out.count.size()) {
      out.count.push_back(0);
      out.exemplar.push_back(r);
    }
    out.code[r] = id;
    ++out.count[id];
  };

  // Mixed-radix packing when the sub-grid fits; direct addressing when it is small.
  bool fits = true;
  std::uint64_t grid = 1;
  for (auto i : factors) {
    const auto card = static_cast<std::uint64_t>(d.cardinalities()[i]);
    if (grid > UINT64_MAX / card) {
      fits = false;
      break;
    }
    grid *= card;
  }
  auto pack = [&](std::size_t r) {
    std::uint64_t key = 0;
    for (auto i : factors)
      key = key * static_cast<std::uint64_t>(d.cardinalities()[i]) +
            static_cast<std::uint64_t>(d.factor(r, i));
    return key;
  };

  if (fits && grid <= std::max<std::uint64_t>(4 * n, 1u << 16)) {
    std::vector<std::uint32_t> slot(grid, UINT32_MAX);
    for (std::size_t r = 0; r < n; ++r) {
      auto& s = slot[pack(r)];
      if (s == UINT32_MAX) s = static_cast<std::uint32_t>(out.count.size());
      assign(r, s);
    }
  } else if (fits) {
    std::unordered_map<std::uint64_t, std::uint32_t> slot;
    slot.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
      auto [it, inserted] = slot.try_emplace(pack(r), static_cast<std::uint32_t>(out.count.size()));
      assign(r, it->second);
    }
  } else {
    // Fold one factor at a time: id_t = intern(id_{t-1} * card + g). Each
    // intermediate id is < n and each card <= n, so the pair key cannot overflow.
    std::vector<std::uint64_t> running(n, 0);
    for (auto i : factors) {
      std::unordered_map<std::uint64_t, std::uint64_t> intern;
      const auto card = static_cast<std::uint64_t>(d.cardinalities()[i]);
      for (std::size_t r = 0; r < n; ++r) {
        const std::uint64_t key = running[r] * card + static_cast<std::uint64_t>(d.factor(r, i));
        running[r] = intern.try_emplace(key, intern.size()).first->second;
      }
    }
    std::unordered_map<std::uint64_t, std::uint32_t> slot;
    for (std::size_t r = 0; r < n; ++r) {
      auto [it, inserted] =
          slot.try_emplace(running[r], static_cast<std::uint32_t>(out.count.size()));
      assign(r, it->second);
    }
  }
  return out;
}

/// Rank of each code when the sub-tuples are sorted lexicographically.
inline std::vector<std::uint32_t> lexicographic_ranks(const LabeledDataset& d,
                                                      std::span<const std::size_t> factors,
                                                      const TupleCodes& codes) {
  std::vector<std::uint32_t> by_rank(codes.distinct());
  std::iota(by_rank.begin(), by_rank.end(), 0u);
  std::sort(by_rank.begin(), by_rank.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto ra = codes.exemplar[a], rb = codes.exemplar[b];
    for (auto i : factors) {
      const auto va = d.factor(ra, i), vb = d.factor(rb, i);
      if (va != vb) return va < vb;
    }
    return false;
  });
  std::vector<std::uint32_t> rank(codes.distinct());
  for (std::uint32_t k = 0; k < by_rank.size(); ++k) rank[by_rank[k]] = k;
  return rank;
}

/// Nested partition of the rows: outer cells by g_I, inner cells by g_J
/// within each outer cell. Cells are ordered lexicographically by key and
/// rows inside a cell keep dataset order.
class PartitionTable {
 public:
  std::size_t rows() const { return order_.size(); }
  std::size_t outer_count() const { return outer_begin_.size() - 1; }
  std::size_t target_width() const { return target_width_; }
  std::size_t nuisance_width() const { return nuisance_width_; }

  std::span<const std::int32_t> outer_key(std::size_t k) const {
    return {outer_keys_.data() + k * target_width_, target_width_};
  }
  std::span<const std::size_t> outer_rows(std::size_t k) const {
    return {order_.data() + outer_begin_[k], outer_begin_[k + 1] - outer_begin_[k]};
  }
  std::size_t inner_count(std::size_t k) const { return inner_first_[k + 1] - inner_first_[k]; }
  std::span<const std::int32_t> inner_key(std::size_t k, std::size_t l) const {
    return {inner_keys_.data() + (inner_first_[k] + l) * nuisance_width_, nuisance_width_};
  }
  std::span<const std::size_t> inner_rows(std::size_t k, std::size_t l) const {
    const auto c = inner_first_[k] + l;
    return {order_.data() + inner_begin_[c], inner_begin_[c + 1] - inner_begin_[c]};
  }

 private:
  friend PartitionTable build_partition(const LabeledDataset&, const IndexSpec&, VisitCounter*);

  std::size_t target_width_ = 0;
  std::size_t nuisance_width_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> outer_begin_;
  std::vector<std::size_t> inner_first_;
  std::vector<std::size_t> inner_begin_;
  std::vector<std::int32_t> outer_keys_;
  std::vector<std::int32_t> inner_keys_;
};

namespace detail {

// Stable counting sort of `rows` by key[row] in [0, buckets).
inline std::vector<std::size_t> counting_sort(const std::vector<std::size_t>& rows,
                                              const std::vector<std::uint32_t>& key,
                                              std::size_t buckets) {
  std::vector<std::size_t> start(buckets + 1, 0);
  for (auto r : rows) ++start[key[r] + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<std::size_t> out(rows.size());
  for (auto r : rows) out[start[key[r]]++] = r;
  return out;
}

}  // namespace detail

/// Hash-partitions `d` by g_I, then each part by g_J. Linear in N apart from
/// sorting the distinct keys.
inline PartitionTable build_partition(const LabeledDataset& d, const IndexSpec& spec,
                                      VisitCounter* visits = nullptr) {
  validate(spec, d, false);
  const std::size_t n = d.rows();
  const auto target_codes = encode_tuples(d, spec.targets, visits);
  const auto nuisance_codes = encode_tuples(d, spec.nuisance, visits);
  const auto target_rank = lexicographic_ranks(d, spec.targets, target_codes);
  const auto nuisance_rank = lexicographic_ranks(d, spec.nuisance, nuisance_codes);

  std::vector<std::uint32_t> key_j(n), key_i(n);
  for (std::size_t r = 0; r < n; ++r) {
    key_j[r] = nuisance_rank[nuisance_codes.code[r]];
    key_i[r] = target_rank[target_codes.code[r]];
  }
  if (visits) visits->add(n);

  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  rows = detail::counting_sort(rows, key_j, nuisance_codes.distinct());
  if (visits) visits->add(n);
  rows = detail::counting_sort(rows, key_i, target_codes.distinct());
  if (visits) visits->add(n);

  PartitionTable t;
  t.target_width_ = spec.targets.size();
  t.nuisance_width_ = spec.nuisance.size();
  t.order_ = std::move(rows);
  t.inner_first_.push_back(0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto r = t.order_[p];
    const bool new_outer = p == 0 || key_i[r] != key_i[t.order_[p - 1]];
    const bool new_inner = new_outer || key_j[r] != key_j[t.order_[p - 1]];
    if (new_outer) {
      if (p != 0) t.inner_first_.push_back(t.inner_begin_.size());
      t.outer_begin_.push_back(p);
      for (auto i : spec.targets) t.outer_keys_.push_back(d.factor(r, i));
    }
    if (new_inner) {
      t.inner_begin_.push_back(p);
      for (auto j : spec.nuisance) t.inner_keys_.push_back(d.factor(r, j));
    }
  }
  if (visits) visits->add(n);
  t.outer_begin_.push_back(n);
  t.inner_first_.push_back(t.inner_begin_.size());
  t.inner_begin_.push_back(n);
  return t;
}

/// Empirical probabilities used by the importance weights, available per row
/// and per tuple.
///
/// Three marginals are kept: the full tuple g, the residual g_{\(I u J)} and
/// the target residual g_{\I}. The last one adjusts the reference mean under
/// do(G_I <- g_I) alone.
class FrequencyTable {
 public:
  struct Entry {
    std::vector<std::int32_t> tuple;
    double probability = 0.0;
  };

  std::size_t rows() const { return rows_; }

  double full(std::size_t r) const { return prob(full_, r); }
  double residual(std::size_t r) const { return prob(residual_, r); }
  double target_residual(std::size_t r) const { return prob(target_residual_, r); }

  std::size_t full_count(std::size_t r) const { return full_.counts[full_.code[r]]; }
  std::size_t residual_count(std::size_t r) const { return residual_.counts[residual_.code[r]]; }
  std::size_t target_residual_count(std::size_t r) const {
    return target_residual_.counts[target_residual_.code[r]];
  }

  const std::vector<std::size_t>& residual_factors() const { return residual_.factors; }
  const std::vector<std::size_t>& target_residual_factors() const {
    return target_residual_.factors;
  }

  std::vector<Entry> full_support() const { return support(full_); }
  std::vector<Entry> residual_support() const { return support(residual_); }

  /// p̂(g) for a full tuple; 0 when unobserved.
  double full_probability(std::span<const std::int32_t> tuple) const {
    return lookup(full_, tuple);
  }
  /// p̂(g_{\(I u J)}) for a residual tuple; 0 when unobserved.
  double residual_probability(std::span<const std::int32_t> tuple) const {
    return lookup(residual_, tuple);
  }

 private:
  friend FrequencyTable build_frequencies(const LabeledDataset&, const IndexSpec&, VisitCounter*);

  struct Marginal {
    std::vector<std::size_t> factors;
    std::vector<std::uint32_t> code;
    std::vector<std::size_t> counts;
    std::vector<std::int32_t> tuples;  // distinct() x factors.size(), indexed by rank
    std::vector<std::uint32_t> rank;   // code -> rank
    std::vector<std::size_t> rank_counts;
  };

  double prob(const Marginal& m, std::size_t r) const {
    return static_cast<double>(m.counts[m.code[r]]) / static_cast<double>(rows_);
  }

  std::vector<Entry> support(const Marginal& m) const {
    const std::size_t w = m.factors.size();
    std::vector<Entry> out(m.counts.size());
    for (std::size_t c = 0; c < m.counts.size(); ++c) {
      auto& e = out[m.rank[c]];
      e.tuple.assign(m.tuples.begin() + static_cast<std::ptrdiff_t>(m.rank[c] * w),
                     m.tuples.begin() + static_cast<std::ptrdiff_t>((m.rank[c] + 1) * w));
      e.probability = static_cast<double>(m.counts[c]) / static_cast<double>(rows_);
    }
    return out;
  }

  double lookup(const Marginal& m, std::span<const std::int32_t> tuple) const {
    const std::size_t w = m.factors.size();
    if (tuple.size() != w) throw ValidationError("tuple width does not match the marginal");
    std::size_t lo = 0, hi = m.counts.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      const auto* t = m.tuples.data() + mid * w;
      if (std::lexicographical_compare(t, t + w, tuple.begin(), tuple.end()))
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo == m.counts.size() || !std::equal(tuple.begin(), tuple.end(), m.tuples.data() + lo * w))
      return 0.0;
    return static_cast<double>(m.rank_counts[lo]) / static_cast<double>(rows_);
  }

  static Marginal make(const LabeledDataset& d, std::vector<std::size_t> factors,
                       VisitCounter* visits) {
    Marginal m;
    m.factors = std::move(factors);
    auto codes = encode_tuples(d, m.factors, visits);
    m.rank = lexicographic_ranks(d, m.factors, codes);
    m.tuples.resize(codes.distinct() * m.factors.size());
    for (std::size_t c = 0; c < codes.distinct(); ++c)
      for (std::size_t a = 0; a < m.factors.size(); ++a)
        m.tuples[m.rank[c] * m.factors.size() + a] = d.factor(codes.exemplar[c], m.factors[a]);
    m.rank_counts.resize(codes.distinct());
    for (std::size_t c = 0; c < codes.distinct(); ++c) m.rank_counts[m.rank[c]] = codes.count[c];
    m.code = std::move(codes.code);
    m.counts = std::move(codes.count);
    return m;
  }

  std::size_t rows_ = 0;
  Marginal full_;
  Marginal residual_;
  Marginal target_residual_;
};

inline FrequencyTable build_frequencies(const LabeledDataset& d, const IndexSpec& spec,
                                        VisitCounter* visits = nullptr) {
  validate(spec, d, false);
  FrequencyTable f;
  f.rows_ = d.rows();
  std::vector<std::size_t> all(d.factor_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  f.full_ = FrequencyTable::make(d, std::move(all), visits);
  f.residual_ = FrequencyTable::make(d, complement(d.factor_count(), spec.targets, spec.nuisance),
                                     visits);
  f.target_residual_ = FrequencyTable::make(d, complement(d.factor_count(), spec.targets), visits);
  return f;
}

}  // namespace irs
