#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "irs/error.hpp"

namespace irs {

enum class Distance { l2, l1, linf };

inline std::string_view to_string(Distance d) {
  switch (d) {
    case Distance::l2: return "l2";
    case Distance::l1: return "l1";
    case Distance::linf: return "linf";
  }
  return "?";
}

inline Distance parse_distance(std::string_view s) {
  if (s == "l2") return Distance::l2;
  if (s == "l1") return Distance::l1;
  if (s == "linf") return Distance::linf;
  throw ValidationError("unknown distance '" + std::string(s) + "' (expected l2, l1 or linf)");
}

inline double distance(std::span<const double> a, std::span<const double> b, Distance kind) {
  if (a.size() != b.size())
    throw ValidationError("distance: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = std::abs(a[k] - b[k]);
    switch (kind) {
      case Distance::l2: acc += diff * diff; break;
      case Distance::l1: acc += diff; break;
      case Distance::linf: acc = std::max(acc, diff); break;
    }
  }
  return kind == Distance::l2 ? std::sqrt(acc) : acc;
}

}  // namespace irs
