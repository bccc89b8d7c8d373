#pragma once

#include <span>
#include <string>
#include <vector>

namespace tdbsde {

/// Free path L with L(0) = 0 and its reflector K(t) = max(0, max_{s <= t} L(s)).
struct SkorohodDecomposition {
  std::vector<double> L;
  std::vector<double> K;
};

SkorohodDecomposition skorohod_map(std::span<const double> L);

struct SkorohodCheck {
  bool ok = true;
  std::string failure;  // first violated property, empty when ok
};

// K(0) = 0, K non-decreasing, K >= max(0, L), and K only moves at nodes where
// L reaches a new running maximum (K = L there). Exact comparisons.
SkorohodCheck check_skorohod(const SkorohodDecomposition& d);

}  // namespace tdbsde
