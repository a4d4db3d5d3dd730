#pragma once

#include <cmath>
#include <optional>

namespace spikelab::roots {

// Bisection on [lo, hi] for f with a sign change. Returns nullopt when the
// endpoints do not bracket a root. Terminates when the bracket is narrower
// than abs_tol or after max_iter halvings.
template <class F>
std::optional<double> bisect(F&& f, double lo, double hi, double abs_tol = 1e-12,
                             int max_iter = 400) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi)) return std::nullopt;
  for (int it = 0; it < max_iter && (hi - lo) > abs_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // no representable midpoint left
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if (std::signbit(fmid) == std::signbit(flo)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Doubles hi (away from lo) until pred(hi) holds. Returns nullopt if the
// expansion overflows or exceeds max_steps.
template <class Pred>
std::optional<double> expand_until(Pred&& pred, double lo, double hi, int max_steps = 200) {
  double width = hi - lo;
  for (int i = 0; i < max_steps; ++i) {
    if (pred(hi)) return hi;
    width *= 2.0;
    hi = lo + width;
    if (!std::isfinite(hi)) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace spikelab::roots
