#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "bsle/driving_path.hpp"
#include "bsle/rng.hpp"

namespace bsle {

// lambda_t = sqrt(kappa) * B_t on a uniform grid, lambda(0) = 0.
DrivingPath sample_brownian_driver(double kappa, double step, double t_max, RngSpec rng);

// ---------------------------------------------------------------------------
// Driver with two boundary force points x > 0 > y (force values rho_+, rho_-),
// integrated by Euler-Maruyama on lambda co-evolved with the exact per-substep
// flow of the force-point images. Substeps shrink multiplicatively near the
// singularity and the recorded grid stays uniform.
// ---------------------------------------------------------------------------

struct RhoDriverOptions {
    // Stop once min(X, -Y) or X - Y drops below eps_stop_rel * (x - y).
    double eps_stop_rel = 1e-5;
    // Substep = step * min(1, X^2, Y^2, (X-Y)^2) / shrink_scale.
    double shrink_scale = 4.0;
    std::uint64_t max_substeps = 200'000'000;
    bool record = true;
};

struct RhoDriverResult {
    DrivingPath driver;           // lifetime_index set; empty when record = false
    std::vector<double> X_trace;  // X_t = f_t(x) - lambda_t at grid times
    std::vector<double> Y_trace;
    double T = 0.0;               // t_stop + remainder bound
    double t_stop = 0.0;
    double remainder_bound = 0.0;  // (X-Y)^2 / 16 at the stop state
    double X_stop = 0.0, Y_stop = 0.0;
    double x = 0.0, y = 0.0;
    double kappa = 0.0, rho_plus = 0.0, rho_minus = 0.0;
};

RhoDriverResult sample_rho_driver(double kappa, double rho_plus, double rho_minus,
                                  double x, double y, double step, RngSpec rng,
                                  const RhoDriverOptions& opt = {});

// Lifetime only, no recording; identical arithmetic and stream use.
double rho_lifetime(double kappa, double rho_plus, double rho_minus,
                    double x, double y, double step, RngSpec rng,
                    const RhoDriverOptions& opt = {});

// State of the driver at a grid-aligned capacity time t: either the process
// is still alive there (with its driving value) or it died earlier at T.
struct RhoAtTime {
    bool alive = false;
    double lambda = 0.0;
    double T = 0.0;
};
RhoAtTime rho_driver_at_time(double kappa, double rho_plus, double rho_minus,
                             double x, double y, double t, double step, RngSpec rng,
                             const RhoDriverOptions& opt = {});

// Continues a finite-lifetime driver by an independent scaled Brownian
// motion on the same grid, out to total duration t_max.
DrivingPath extend_driver(const RhoDriverResult& result, double step, double t_max,
                          RngSpec rng);

// ---------------------------------------------------------------------------
// Reduced diffusion in V = arccos(W-hat) coordinates:
//   dV = dB + ((8/kappa - 1)/2) cot(V) dt,   V in (0, pi).
// Additive noise keeps the scheme regular at the ends; substeps are capped
// so a single update cannot cross 0 or pi.
// ---------------------------------------------------------------------------

struct BesselPath {
    double step = 0.0;              // u-time grid spacing
    std::vector<double> V_values;   // V at grid times, V[0] = arccos(w0)
    double w0 = 0.0;
};

BesselPath sample_cos_bessel(double kappa, double w0, double step, double t_max,
                             RngSpec rng);

// Lifetime recovered from the reduced diffusion:
//   T = ((x-y)^2 / (4 kappa)) * integral_0^inf e^{-4t/kappa} (1 - What_t^2) dt,
// by trapezoidal quadrature on the sampled grid. The unresolved tail is
// certified: the true quadrature target lies in [value, value + tail_bound].
struct LifetimeEstimate {
    double value = 0.0;
    double tail_bound = 0.0;
};

LifetimeEstimate lifetime_from_bessel(const BesselPath& path, double x, double y,
                                      double kappa, double tail_tol);

// Fused sampler + quadrature, bit-identical to composing the two calls above
// with horizon bessel_horizon(kappa, x - y, tail_tol).
LifetimeEstimate sample_lifetime(double kappa, double w0, double x, double y,
                                 double step, double tail_tol, RngSpec rng);

// Same with an explicit u-horizon (at least one grid step is taken).
LifetimeEstimate sample_lifetime_with_horizon(double kappa, double w0, double x,
                                              double y, double step, double horizon,
                                              RngSpec rng);

// Smallest u-horizon with certified tail below tail_tol:
//   ((x-y)^2 / 16) e^{-4 t / kappa} < tail_tol.
double bessel_horizon(double kappa, double gap, double tail_tol);

// ---------------------------------------------------------------------------
// Coordinate helpers.
// ---------------------------------------------------------------------------

double time_change_u(double X, double Y, double x, double y, double kappa);
double u_rate(double X, double Y, double kappa);
double w_from_xy(double X, double Y);

}  // namespace bsle
