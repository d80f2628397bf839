#pragma once

#include <algorithm>
#include <cmath>

namespace etrs::detail {

struct Probe {
  /// Same sign as the (nonincreasing) function whose sign change is sought;
  /// used for interpolation.
  double value;
  /// Caller-level convergence at this abscissa.
  bool done;
};

struct Bracket {
  double lo;
  double hi;
  bool done = false;  // a probe reported convergence at `last`
  double last = 0.0;
  int probes = 0;
};

/// Illinois regula falsi with bisection fallback on a nonincreasing function,
/// starting from f(lo) > 0 > f(hi). Stops on a probe reporting done, when the
/// bracket is narrower than `width_tol(lo, hi)`, or after max_probes.
template <class F, class WidthTol>
Bracket illinois_decreasing(F&& f, double lo, double flo, double hi,
                            double fhi, WidthTol&& width_tol,
                            int max_probes = 200) {
  Bracket b{lo, hi};
  int side = 0;
  double width_two_ago = hi - lo;
  double width_one_ago = hi - lo;
  bool bisect = false;
  while (b.probes < max_probes) {
    const double w = b.hi - b.lo;
    if (w <= width_tol(b.lo, b.hi)) break;
    double x;
    if (bisect || !(flo > fhi) || !std::isfinite(flo) || !std::isfinite(fhi)) {
      x = 0.5 * (b.lo + b.hi);
    } else {
      x = b.lo + flo * (b.hi - b.lo) / (flo - fhi);
      x = std::clamp(x, b.lo + 1e-3 * w, b.hi - 1e-3 * w);
    }
    const Probe p = f(x);
    ++b.probes;
    b.last = x;
    if (p.done || p.value == 0.0) {
      b.done = true;
      return b;
    }
    if (p.value > 0.0) {
      b.lo = x;
      flo = p.value;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      b.hi = x;
      fhi = p.value;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    const double nw = b.hi - b.lo;
    bisect = nw > 0.5 * width_two_ago;
    width_two_ago = width_one_ago;
    width_one_ago = nw;
  }
  return b;
}

}  // namespace etrs::detail
