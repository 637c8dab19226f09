#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "alignlab/errors.hpp"

namespace alignlab {

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ParameterError("fit_line: x and y sizes differ");
  if (xs.size() < 2) throw InsufficientDataError("fit_line needs at least two points");
  const double n = double(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0)) throw InsufficientDataError("fit_line needs distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_res = syy - f.slope * sxy;
  f.r2 = syy > 0 ? 1.0 - std::max(ss_res, 0.0) / syy : 1.0;
  return f;
}

/// Larger root of a x^2 + b x + c = 0 with a > 0 and c <= 0, evaluated
/// without cancellation.
template <typename Scalar>
Scalar positive_root(Scalar a, Scalar b, Scalar c) {
  if (!(a > Scalar(0))) throw ParameterError("positive_root requires a leading coefficient > 0");
  const Scalar disc = std::sqrt(std::max(b * b - Scalar(4) * a * c, Scalar(0)));
  if (b >= Scalar(0)) {
    const Scalar den = -b - disc;
    return den == Scalar(0) ? Scalar(0) : Scalar(2) * c / den;
  }
  return (-b + disc) / (Scalar(2) * a);
}

}  // namespace alignlab
