#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "irs/dataset.hpp"
#include "irs/error.hpp"

namespace irs {

/// Discrete unobserved confounder C_c with prior p(c).
struct Confounder {
  std::string name;
  std::vector<double> prior;
};

/// G_i <- f_i(PA_i^C, N_i) as a conditional table. Row index is the
/// mixed-radix code of the parent configuration, first parent most significant;
/// with no parents the table has a single row.
struct FactorMechanism {
  std::string name;
  std::size_t cardinality = 2;
  std::vector<std::size_t> parents;
  std::vector<std::vector<double>> table;
};

/// A disentangled causal process: confounders feed factors, factors never feed
/// each other.
struct ScmConfig {
  std::vector<Confounder> confounders;
  std::vector<FactorMechanism> factors;

  std::size_t parent_configurations(std::size_t i) const {
    std::size_t rows = 1;
    for (auto c : factors[i].parents) rows *= confounders[c].prior.size();
    return rows;
  }

  std::size_t parent_row(std::size_t i, std::span<const std::size_t> confounder_values) const {
    std::size_t row = 0;
    for (auto c : factors[i].parents)
      row = row * confounders[c].prior.size() + confounder_values[c];
    return row;
  }
};

namespace detail {

inline void check_distribution(std::span<const double> p, const std::string& where) {
  if (p.empty()) throw ValidationError(where + ": empty probability vector");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError(where + ": probabilities must be finite and >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ValidationError(where + ": probabilities sum to " + std::to_string(total) + ", not 1");
}

}  // namespace detail

inline void validate(const ScmConfig& cfg) {
  if (cfg.factors.empty()) throw ValidationError("factors: at least one factor is required");
  for (std::size_t c = 0; c < cfg.confounders.size(); ++c)
    detail::check_distribution(cfg.confounders[c].prior, "confounders[" + std::to_string(c) + "].prior");
  for (std::size_t i = 0; i < cfg.factors.size(); ++i) {
    const auto& f = cfg.factors[i];
    const std::string where = "factors[" + std::to_string(i) + "]";
    if (f.cardinality < 2) throw ValidationError(where + ".cardinality: must be >= 2");
    for (std::size_t a = 0; a < f.parents.size(); ++a) {
      if (f.parents[a] >= cfg.confounders.size())
        throw ValidationError(where + ".parents: confounder " + std::to_string(f.parents[a]) +
                              " does not exist (factors may only have confounder parents)");
      for (std::size_t b = 0; b < a; ++b)
        if (f.parents[a] == f.parents[b])
          throw ValidationError(where + ".parents: duplicate parent " + std::to_string(f.parents[a]));
    }
    if (f.table.size() != cfg.parent_configurations(i))
      throw ValidationError(where + ".table: expected " + std::to_string(cfg.parent_configurations(i)) +
                            " rows, got " + std::to_string(f.table.size()));
    for (std::size_t r = 0; r < f.table.size(); ++r) {
      const std::string row = where + ".table[" + std::to_string(r) + "]";
      if (f.table[r].size() != f.cardinality)
        throw ValidationError(row + ": expected " + std::to_string(f.cardinality) + " entries");
      detail::check_distribution(f.table[r], row);
    }
  }
}

/// Uniform factors, no confounding.
inline ScmConfig uniform_scm(const std::vector<std::size_t>& cardinalities) {
  ScmConfig cfg;
  for (std::size_t i = 0; i < cardinalities.size(); ++i) {
    FactorMechanism f;
    f.name = "g_" + std::to_string(i);
    f.cardinality = cardinalities[i];
    f.table = {std::vector<double>(cardinalities[i], 1.0 / static_cast<double>(cardinalities[i]))};
    cfg.factors.push_back(std::move(f));
  }
  return cfg;
}

enum class EncoderKind { permutation, linear, polynomial, constant };

/// z = scale * g^power + offset; strictly monotone for scale != 0, power > 0, g >= 0.
struct MonotoneMap {
  double scale = 1.0;
  double offset = 0.0;
  double power = 1.0;
  double operator()(double g) const { return scale * std::pow(g, power) + offset; }
};

/// coefficient * prod_j g_j^powers[j] * prod_(j, v) in match [g_j == v].
struct PolynomialTerm {
  double coefficient = 1.0;
  std::vector<double> powers;
  std::vector<std::pair<std::size_t, std::int32_t>> match;
};

/// Stand-in for encoder-after-renderer: a deterministic map from factor
/// realizations to codes plus optional additive Gaussian noise.
struct SyntheticEncoder {
  EncoderKind kind = EncoderKind::permutation;
  std::size_t output_dim = 0;
  /// permutation: factor i drives output permutation[i] through maps[i];
  /// outputs outside the image are 0.
  std::vector<std::size_t> permutation;
  std::vector<MonotoneMap> maps;
  /// linear: z = M g + bias, M is output_dim x K row-major.
  std::vector<double> mixing;
  std::vector<double> bias;
  /// polynomial: one term list per output.
  std::vector<std::vector<PolynomialTerm>> terms;
  /// constant: every output equals this value.
  double constant = 0.0;
  /// Noisy wrapper: standard deviation of zero-mean Gaussian noise, 0 = noise-free.
  double noise_scale = 0.0;

  /// Noise-free code E[Z | g].
  std::vector<double> encode(std::span<const std::int32_t> g) const {
    std::vector<double> z(output_dim, 0.0);
    switch (kind) {
      case EncoderKind::permutation:
        for (std::size_t i = 0; i < permutation.size(); ++i)
          z[permutation[i]] = maps[i](static_cast<double>(g[i]));
        break;
      case EncoderKind::linear:
        for (std::size_t l = 0; l < output_dim; ++l) {
          double v = bias.empty() ? 0.0 : bias[l];
          for (std::size_t i = 0; i < g.size(); ++i) v += mixing[l * g.size() + i] * g[i];
          z[l] = v;
        }
        break;
      case EncoderKind::polynomial:
        for (std::size_t l = 0; l < output_dim; ++l)
          for (const auto& t : terms[l]) {
            double v = t.coefficient;
            for (std::size_t j = 0; j < t.powers.size(); ++j)
              if (t.powers[j] != 0.0) v *= std::pow(static_cast<double>(g[j]), t.powers[j]);
            for (const auto& [j, value] : t.match)
              if (g[j] != value) v = 0.0;
            z[l] += v;
          }
        break;
      case EncoderKind::constant:
        std::fill(z.begin(), z.end(), constant);
        break;
    }
    return z;
  }

  void validate(std::size_t factor_count) const {
    if (output_dim == 0) throw ValidationError("encoder.output_dim: must be >= 1");
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale))
      throw ValidationError("encoder.noise: must be finite and >= 0");
    switch (kind) {
      case EncoderKind::permutation: {
        if (permutation.size() != factor_count)
          throw ValidationError("encoder.permutation: needs one target per factor");
        if (maps.size() != factor_count) throw ValidationError("encoder.maps: needs one map per factor");
        std::vector<bool> used(output_dim, false);
        for (auto p : permutation) {
          if (p >= output_dim) throw ValidationError("encoder.permutation: target out of range");
          if (used[p]) throw ValidationError("encoder.permutation: targets must be distinct");
          used[p] = true;
        }
        for (const auto& m : maps)
          if (m.scale == 0.0 || !(m.power > 0.0))
            throw ValidationError("encoder.maps: scale must be non-zero and power positive");
        break;
      }
      case EncoderKind::linear:
        if (mixing.size() != output_dim * factor_count)
          throw ValidationError("encoder.matrix: expected output_dim x K entries");
        if (!bias.empty() && bias.size() != output_dim)
          throw ValidationError("encoder.bias: expected output_dim entries");
        break;
      case EncoderKind::polynomial:
        if (terms.size() != output_dim) throw ValidationError("encoder.terms: one list per output");
        for (const auto& list : terms)
          for (const auto& t : list) {
            if (t.powers.size() > factor_count)
              throw ValidationError("encoder.terms: more powers than factors");
            for (const auto& [j, v] : t.match)
              if (j >= factor_count) throw ValidationError("encoder.terms: match factor out of range");
          }
        break;
      case EncoderKind::constant: break;
    }
  }
};

/// Identity-like permutation encoder: output i = scales[i] * g_i + offsets[i].
inline SyntheticEncoder permutation_encoder(std::vector<std::size_t> permutation,
                                            std::size_t output_dim,
                                            std::vector<MonotoneMap> maps = {}) {
  SyntheticEncoder e;
  e.kind = EncoderKind::permutation;
  e.output_dim = output_dim;
  if (maps.empty()) maps.assign(permutation.size(), MonotoneMap{});
  e.permutation = std::move(permutation);
  e.maps = std::move(maps);
  return e;
}

enum class SamplingMode {
  /// C -> G -> Z ancestral sampling.
  ancestral,
  /// Enumerate the factor grid in lexicographic order, n / grid times each;
  /// mechanism tables are not used.
  crossed,
};

/// Portable random source: std::mt19937_64 (sequence fixed by the standard),
/// uniforms from the top 53 bits, normals by Box-Muller.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t categorical(std::span<const double> p) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      acc += p[k];
      if (u < acc) return k;
    }
    for (std::size_t k = p.size(); k-- > 0;)
      if (p[k] > 0.0) return k;
    return p.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

/// Raw sample: factor realizations in SCM value space (not canonicalized).
struct ScmSample {
  std::size_t rows = 0;
  std::size_t factor_count = 0;
  std::size_t feature_count = 0;
  std::vector<std::int32_t> factors;
  std::vector<double> codes;
  /// Hidden confounder draws, rows x |confounders|; empty in crossed mode.
  std::vector<std::int32_t> confounders;
};

inline std::size_t grid_size(const ScmConfig& cfg) {
  std::size_t g = 1;
  for (const auto& f : cfg.factors) {
    if (g > SIZE_MAX / f.cardinality) throw ValidationError("factor grid too large");
    g *= f.cardinality;
  }
  return g;
}

inline ScmSample sample_raw(const ScmConfig& cfg, const SyntheticEncoder& enc, std::size_t n,
                            std::uint64_t seed, SamplingMode mode = SamplingMode::ancestral) {
  validate(cfg);
  enc.validate(cfg.factors.size());
  if (n == 0) throw ValidationError("n must be >= 1");
  const std::size_t k = cfg.factors.size();
  const std::size_t grid = grid_size(cfg);
  if (mode == SamplingMode::crossed && n % grid != 0)
    throw ValidationError("crossed mode: n = " + std::to_string(n) +
                          " is not a multiple of the factor grid size " + std::to_string(grid));

  PortableRng rng(seed);
  ScmSample s;
  s.rows = n;
  s.factor_count = k;
  s.feature_count = enc.output_dim;
  s.factors.resize(n * k);
  s.codes.resize(n * enc.output_dim);
  if (mode == SamplingMode::ancestral) s.confounders.resize(n * cfg.confounders.size());
  std::vector<std::size_t> c(cfg.confounders.size());
  std::vector<std::int32_t> g(k);
  for (std::size_t r = 0; r < n; ++r) {
    if (mode == SamplingMode::crossed) {
      std::size_t idx = r % grid;
      for (std::size_t i = k; i-- > 0;) {
        g[i] = static_cast<std::int32_t>(idx % cfg.factors[i].cardinality);
        idx /= cfg.factors[i].cardinality;
      }
    } else {
      for (std::size_t a = 0; a < c.size(); ++a) {
        c[a] = rng.categorical(cfg.confounders[a].prior);
        s.confounders[r * c.size() + a] = static_cast<std::int32_t>(c[a]);
      }
      for (std::size_t i = 0; i < k; ++i)
        g[i] = static_cast<std::int32_t>(rng.categorical(cfg.factors[i].table[cfg.parent_row(i, c)]));
    }
    auto z = enc.encode(g);
    if (enc.noise_scale > 0.0)
      for (auto& v : z) v += enc.noise_scale * rng.normal();
    std::copy(g.begin(), g.end(), s.factors.begin() + static_cast<std::ptrdiff_t>(r * k));
    std::copy(z.begin(), z.end(), s.codes.begin() + static_cast<std::ptrdiff_t>(r * enc.output_dim));
  }
  return s;
}

/// Ancestral (or crossed) sample returned as a LabeledDataset. Confounders are
/// not part of the output; factor realizations that never occurred are
/// dropped by canonicalization and recorded in binning().levels.
inline LabeledDataset sample_dataset(const ScmConfig& cfg, const SyntheticEncoder& enc,
                                     std::size_t n, std::uint64_t seed,
                                     SamplingMode mode = SamplingMode::ancestral) {
  const auto s = sample_raw(cfg, enc, n, seed, mode);
  std::vector<std::int32_t> factors(s.factors.size());
  std::vector<FactorBinning> binning;
  std::vector<std::string> factor_names, feature_names;
  std::vector<double> column(n);
  for (std::size_t i = 0; i < s.factor_count; ++i) {
    for (std::size_t r = 0; r < n; ++r) column[r] = s.factors[r * s.factor_count + i];
    auto disc = canonicalize(column);
    for (std::size_t r = 0; r < n; ++r) factors[r * s.factor_count + i] = disc.indices[r];
    binning.push_back(std::move(disc.binning));
    factor_names.push_back(cfg.factors[i].name.empty() ? "g_" + std::to_string(i) : cfg.factors[i].name);
  }
  for (std::size_t l = 0; l < s.feature_count; ++l) feature_names.push_back("z_" + std::to_string(l));
  return LabeledDataset(n, s.feature_count, s.codes, s.factor_count, std::move(factors),
                        std::move(feature_names), std::move(factor_names), std::move(binning));
}

}  // namespace irs
