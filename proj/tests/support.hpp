#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "irs/irs.hpp"

namespace irs::fixtures {

using CodeFn = std::function<std::vector<double>(const std::vector<std::int32_t>&)>;

/// Every tuple of the grid `cards` once, lexicographic, with codes f(g).
inline LabeledDataset crossed(const std::vector<std::size_t>& cards, const CodeFn& f, std::size_t reps = 1) {
  std::vector<std::int32_t> g(cards.size(), 0), factors;
  std::vector<double> codes;
  std::size_t rows = 0, dim = 0;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    std::fill(g.begin(), g.end(), 0);
    for (;;) {
      const auto z = f(g);
      dim = z.size();
      codes.insert(codes.end(), z.begin(), z.end());
      factors.insert(factors.end(), g.begin(), g.end());
      ++rows;
      std::size_t i = cards.size();
      while (i-- > 0) {
        if (static_cast<std::size_t>(++g[i]) < cards[i]) break;
        g[i] = 0;
      }
      if (i == static_cast<std::size_t>(-1)) break;
    }
  }
  return LabeledDataset(rows, dim, std::move(codes), cards.size(), std::move(factors));
}

inline LabeledDataset from_rows(const std::vector<std::vector<std::int32_t>>& g,
                                const std::vector<std::vector<double>>& z) {
  std::vector<std::int32_t> factors;
  std::vector<double> codes;
  for (const auto& r : g) factors.insert(factors.end(), r.begin(), r.end());
  for (const auto& r : z) codes.insert(codes.end(), r.begin(), r.end());
  return LabeledDataset(g.size(), z.front().size(), std::move(codes), g.front().size(), std::move(factors));
}

/// Dataset with rows drawn uniformly from a random subset of the grid, so some
/// cells are missing and others repeated. Every factor still takes all values.
inline LabeledDataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t k, std::size_t k_prime,
                                     std::size_t max_card = 4) {
  for (;;) {
    std::vector<std::size_t> cards(k);
    for (auto& c : cards) c = 2 + rng() % (max_card - 1);
    std::vector<std::int32_t> factors(n * k);
    std::vector<double> codes(n * k_prime);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    // skewed factor marginals to create dependence between factors
    for (std::size_t r = 0; r < n; ++r) {
      const auto shared = static_cast<std::int32_t>(rng() % 4);
      for (std::size_t i = 0; i < k; ++i) {
        const bool follow = rng() % 3 == 0;
        factors[r * k + i] = static_cast<std::int32_t>((follow ? static_cast<std::size_t>(shared) : rng()) % cards[i]);
      }
      for (std::size_t l = 0; l < k_prime; ++l) {
        double v = u(rng) * 0.3;
        for (std::size_t i = 0; i < k; ++i) v += (static_cast<double>(l + 1) * 0.37 + static_cast<double>(i)) *
                                                 factors[r * k + i] * ((l + i) % 2 ? 1.0 : -0.5);
        codes[r * k_prime + l] = v;
      }
    }
    bool tight = true;
    for (std::size_t i = 0; i < k && tight; ++i) {
      std::vector<bool> seen(cards[i], false);
      for (std::size_t r = 0; r < n; ++r) seen[static_cast<std::size_t>(factors[r * k + i])] = true;
      for (bool s : seen) tight = tight && s;
    }
    if (tight) return LabeledDataset(n, k_prime, std::move(codes), k, std::move(factors));
  }
}

/// Copy of `d` with rows reordered by `perm`.
inline LabeledDataset permute_rows(const LabeledDataset& d, const std::vector<std::size_t>& perm) {
  std::vector<std::int32_t> factors;
  std::vector<double> codes;
  for (auto r : perm) {
    const auto f = d.factor_row(r);
    const auto c = d.code_row(r);
    factors.insert(factors.end(), f.begin(), f.end());
    codes.insert(codes.end(), c.begin(), c.end());
  }
  return LabeledDataset(d.rows(), d.feature_count(), std::move(codes), d.factor_count(), std::move(factors));
}

/// Copy of `d` with column l replaced by a * z_l + b.
inline LabeledDataset affine_column(const LabeledDataset& d, std::size_t l, double a, double b) {
  std::vector<double> codes(d.codes().begin(), d.codes().end());
  for (std::size_t r = 0; r < d.rows(); ++r) codes[r * d.feature_count() + l] = a * codes[r * d.feature_count() + l] + b;
  std::vector<std::int32_t> factors(d.factors().begin(), d.factors().end());
  return LabeledDataset(d.rows(), d.feature_count(), std::move(codes), d.factor_count(), std::move(factors));
}

/// C uniform binary; G0 and G1 copy C with probability `agree`; G2 uniform
/// binary and unconfounded.
inline ScmConfig confounded_scm(double agree = 0.9) {
  ScmConfig cfg;
  cfg.confounders.push_back({"c", {0.5, 0.5}});
  const std::vector<std::vector<double>> follow{{agree, 1.0 - agree}, {1.0 - agree, agree}};
  cfg.factors.push_back({"g_0", 2, {0}, follow});
  cfg.factors.push_back({"g_1", 2, {0}, follow});
  cfg.factors.push_back({"g_2", 2, {}, {{0.5, 0.5}}});
  return cfg;
}

inline SyntheticEncoder linear_encoder(std::vector<std::vector<double>> m, double noise = 0.0) {
  SyntheticEncoder e;
  e.kind = EncoderKind::linear;
  e.output_dim = m.size();
  for (const auto& row : m) e.mixing.insert(e.mixing.end(), row.begin(), row.end());
  e.noise_scale = noise;
  return e;
}

}  // namespace irs::fixtures
