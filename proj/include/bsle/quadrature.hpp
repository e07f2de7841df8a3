#pragma once

#include <functional>

#include "bsle/greens.hpp"
#include "bsle/loewner.hpp"

namespace bsle {

// Adaptive 2-D quadrature on a rectangle: tensor Gauss-Legendre panels,
// worst panel split first, until the summed error probe drops below
// rel_tol * |integral|. Throws when the panel budget is exhausted.
double integrate_rect(const std::function<double(double, double)>& f,
                      double x1, double x2, double y1, double y2,
                      double rel_tol);

// Integral of the Green's function over a rectangle strictly inside the
// fourth quadrant, where the integrand is smooth and bounded.
double green_integral(const GreenParams& p, const Rect& rect, double rel_tol = 1e-6);

}  // namespace bsle
