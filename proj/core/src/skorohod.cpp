#include "tdbsde/skorohod.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tdbsde/errors.hpp"

namespace tdbsde {

SkorohodDecomposition skorohod_map(std::span<const double> L) {
  if (L.empty()) throw InvalidInput("skorohod map: empty path");
  if (L[0] != 0.0) throw InvalidInput("skorohod map: the free path must start at 0");
  SkorohodDecomposition out{std::vector<double>(L.begin(), L.end()), std::vector<double>(L.size())};
  double k = 0.0;
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (std::isnan(L[i])) throw InvalidInput("skorohod map: NaN in the free path");
    k = std::max(k, L[i]);
    out.K[i] = k;
  }
  return out;
}

SkorohodCheck check_skorohod(const SkorohodDecomposition& d) {
  auto fail = [](std::size_t i, const char* what) {
    std::ostringstream msg;
    msg << what << " at node " << i;
    return SkorohodCheck{false, msg.str()};
  };
  if (d.K.size() != d.L.size() || d.K.empty()) return {false, "length mismatch"};
  if (d.K[0] != 0.0) return fail(0, "K(0) != 0");
  for (std::size_t i = 0; i < d.K.size(); ++i) {
    if (d.K[i] < d.L[i] || d.K[i] < 0.0) return fail(i, "K below max(0, L)");
    if (i > 0) {
      if (d.K[i] < d.K[i - 1]) return fail(i, "K decreased");
      if (d.K[i] > d.K[i - 1] && d.K[i] != d.L[i]) return fail(i, "K moved off the running maximum");
    }
  }
  return {};
}

}  // namespace tdbsde
