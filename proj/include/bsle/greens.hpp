#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bsle/estimate.hpp"
#include "bsle/rng.hpp"

namespace bsle {

// Parameters of the two-force-point Green's function
//   G(x, y) = |x|^{a+} |y|^{a-} |x - y|^{g},
// with exponents derived from (kappa, rho_+, rho_-). For rho_+ = rho_- = -4
// the exponents are a+ = a- = 4/kappa, g = -8/kappa and q+ = q- = 1, making
// G homogeneous of degree zero.
struct GreenParams {
    double kappa;
    double rho_plus;
    double rho_minus;
    double alpha_plus;
    double alpha_minus;
    double gamma;
    double q_plus;
    double q_minus;

    GreenParams(double kappa_, double rho_plus_, double rho_minus_);
    static GreenParams minus44(double kappa_) { return {kappa_, -4.0, -4.0}; }
};

double green(const GreenParams& p, double x, double y);

// Girsanov local martingale M_t = G(X_t, Y_t) f_t'(x)^{q+} f_t'(y)^{q-}.
double martingale_M(const GreenParams& p, double X, double Y, double dfx, double dfy);

// ---------------------------------------------------------------------------
// Monte Carlo estimators. All lifetime statistics go through the reduced
// diffusion, whose coordinates stay regular; the raw rho-driver is kept
// only for the law-equivalence cross-check.
// ---------------------------------------------------------------------------

struct LifetimeMcOptions {
    double bessel_step = 1e-3;
    double tail_tol = 1e-9;
    unsigned workers = 1;
};

// G_t(x, y) = G(x, y) P_{x,y}[T <= t], from n reduced-diffusion paths
// started at w0 = (x + y)/(x - y) and rescaled by (x - y)^2.
EstimateReport estimate_Gt(double kappa, double x, double y, double t,
                           std::uint64_t n, RngSpec rng,
                           const LifetimeMcOptions& opt = {});

// Sample mean of 1/T at force points (s, s - 1); every 1/T carries its
// certified tail interval. horizon is in u-time units and must reach
// tail_tol, otherwise the call fails.
EstimateReport mean_inverse_lifetime(double kappa, double s, std::uint64_t n,
                                     RngSpec rng, double horizon, double tail_tol,
                                     double bessel_step = 1e-3, unsigned workers = 1);

// Two-sided check of P_{rs, r(s-1)}[T <= 1] = P_{s, s-1}[T <= r^{-2}].
// The sides use disjoint stream blocks, so their difference is a genuine
// two-sample consistency statistic.
struct ScalingCheck {
    EstimateReport left;   // force points (rs, r(s-1)), threshold 1
    EstimateReport right;  // force points (s, s-1), threshold r^{-2}
    double diff = 0.0;
    double combined_se = 0.0;
};
ScalingCheck scaling_check(double kappa, double s, double r, std::uint64_t n,
                           RngSpec rng, const LifetimeMcOptions& opt = {});

// ---------------------------------------------------------------------------
// Flow-based checks under the plain Brownian driver.
// ---------------------------------------------------------------------------

struct MartingaleCheckPoint {
    double t = 0.0;
    double m0 = 0.0;
    EstimateReport stopped_mean;  // E[M at min(t, cap hit, floor hit)]
    double z = 0.0;               // (mean - M0) / SE
};

// Stopped-mean test of the local martingale: the process is frozen at the
// cap level and at a small floor on min(X, -Y), so the stopped value is
// bounded and optional stopping applies.
std::vector<MartingaleCheckPoint> martingale_check(double kappa, double x, double y,
                                                   std::span<const double> t_values,
                                                   double cap, std::uint64_t n,
                                                   double step, RngSpec rng,
                                                   unsigned workers = 1);

// E_B[1_{alive} (M_t / M_0) h(lambda_t)] vs E_rho[1_{T > t} h(lambda_t)]
// with h = clip(. , -1, 1).
struct GirsanovCheck {
    EstimateReport weighted_bm;
    EstimateReport direct_rho;
    double diff = 0.0;
    double combined_se = 0.0;
    double z = 0.0;
};
GirsanovCheck girsanov_transfer_check(double kappa, double x, double y, double t,
                                      std::uint64_t n, double step, RngSpec rng,
                                      unsigned workers = 1);

}  // namespace bsle
