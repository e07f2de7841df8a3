#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsle/estimate.hpp"
#include "bsle/greens.hpp"
#include "bsle/loewner.hpp"
#include "bsle/rng.hpp"

namespace bsle {

// ---------------------------------------------------------------------------
// C1 through the lifetime route:
//   C1 = integral_0^1 G(s, s-1) * (1/2) E_s[1/T] ds,
// obtained from C1 = integral integral G(x,y) P_{x,y}[T <= 1] dx dy by the
// substitution x = r s, y = r (s - 1) (Jacobian r), degree-0 homogeneity of
// G, the scaling law P_{rs,r(s-1)}[T <= 1] = P_s[T <= r^{-2}], and
// integral_0^inf P_s[T^{-1} >= r^2] r dr = (1/2) E_s[1/T].
// Midpoint rule over s-cells with Monte Carlo inner estimates.
// ---------------------------------------------------------------------------

struct C1LifetimeOptions {
    unsigned s_cells = 48;
    std::uint64_t n_per_s = 4000;
    double bessel_step = 1e-3;
    double tail_tol = 1e-9;
    // Node-SE alarm threshold: nodes whose contribution to the total SE
    // exceeds this are counted (error bars already include them).
    double quad_tol = 1e-2;
    unsigned workers = 1;
};

struct C1NodeEstimate {
    double s = 0.0;
    double mean_inv_T = 0.0;
    double se_inv_T = 0.0;
    std::uint64_t n = 0;
};

struct C1Lifetime {
    EstimateReport report;  // C1 point estimate with propagated SE
    std::vector<C1NodeEstimate> nodes;
    unsigned nodes_over_tol = 0;
};

// One s-node; streams rng.stream + node * n_per_s + i. The unit of
// checkpointable work for the lifetime route.
C1NodeEstimate c1_lifetime_node(double kappa, const C1LifetimeOptions& opt,
                                RngSpec rng, unsigned node);
C1Lifetime assemble_c1_lifetime(double kappa, const C1LifetimeOptions& opt,
                                RngSpec rng, std::vector<C1NodeEstimate> nodes);
C1Lifetime estimate_c1_lifetime(double kappa, const C1LifetimeOptions& opt,
                                RngSpec rng);

// Brute-force cross-check of the change of coordinates: a midpoint Riemann
// sum of G(x,y) * P-hat_{x,y}[T <= 1] over the square (0,L] x [-L,0) with
// exact per-cell Green mass, against the s-line route restricted to the
// same region (per-path statistic min(Rmax(s)^2, 1/T)/2). truncation_gap
// estimates the full-C1 mass the square misses.
struct C1OracleOptions {
    double L = 6.0;
    unsigned grid_m = 24;
    std::uint64_t n_per_cell = 256;
    unsigned s_cells = 32;
    std::uint64_t n_per_s = 2000;
    double bessel_step = 2.5e-3;
    double tail_tol = 1e-5;
    unsigned workers = 1;
};

struct C1OracleComparison {
    double grid_value = 0.0, grid_se = 0.0;
    double line_value = 0.0, line_se = 0.0;  // capped to the same region
    double full_line_value = 0.0;            // uncapped, same samples
    double truncation_gap = 0.0;             // full_line - line
};

C1OracleComparison c1_oracle_comparison(double kappa, const C1OracleOptions& opt,
                                        RngSpec rng);

// ---------------------------------------------------------------------------
// C1 through the occupation route:
//   C1 = (integral integral_rect G) / E_B[capacity time the welding curve
//        spends in rect],
// with the per-path occupation computed exactly from the four corner
// swallowing times.
// ---------------------------------------------------------------------------

struct OccupationOptions {
    Rect rect{1.0, 2.0, -2.0, -1.0};
    std::uint64_t n_paths = 50000;
    double step = 2e-4;
    double horizon = 0.0;  // 0 -> 16 * max(x2, -y1)^2
    double max_censored_frac = 1e-3;
    unsigned workers = 1;
};

inline double occupation_horizon(const OccupationOptions& opt) {
    if (opt.horizon > 0.0) return opt.horizon;
    const double d = opt.rect.x2 > -opt.rect.y1 ? opt.rect.x2 : -opt.rect.y1;
    return 16.0 * d * d;
}

constexpr std::uint64_t kOccupationBlock = 4096;

struct OccupationBlockStats {
    double sum = 0.0, sumsq = 0.0;
    std::uint64_t n = 0, censored = 0;
    void fold(const OccupationBlockStats& o) {
        sum += o.sum;
        sumsq += o.sumsq;
        n += o.n;
        censored += o.censored;
    }
};

struct OccupationPathRow {
    std::uint64_t path_index = 0, stream = 0;
    double value = 0.0;
    bool censored = false;
};

// Paths [block * kOccupationBlock, ...) of the estimator; rows, when given,
// receives one entry per path in index order.
OccupationBlockStats occupation_block(double kappa, const OccupationOptions& opt,
                                      RngSpec rng, std::uint64_t block,
                                      std::vector<OccupationPathRow>* rows = nullptr);
inline std::uint64_t occupation_blocks(const OccupationOptions& opt) {
    return (opt.n_paths + kOccupationBlock - 1) / kOccupationBlock;
}

struct C1Occupation {
    EstimateReport c1;
    double mean_occupation = 0.0, se_occupation = 0.0;
    double green_int = 0.0;
    std::uint64_t censored = 0;
    double censor_bias_bound = 0.0;  // censored fraction * horizon
    bool valid = false;
};

C1Occupation assemble_c1_occupation(double kappa, const OccupationOptions& opt,
                                    RngSpec rng, const OccupationBlockStats& folded);
C1Occupation estimate_c1_occupation(double kappa, const OccupationOptions& opt,
                                    RngSpec rng);

// ---------------------------------------------------------------------------
// Cell-wise occupation histogram: occupation/(Green mass) must be flat
// (= 1/C1) across cells; reported as z-scores against the pooled ratio and
// a chi-square statistic, plus a G == 1 negative control.
// ---------------------------------------------------------------------------

struct HistogramOptions {
    Rect window{0.5, 1.5, -1.5, -0.5};
    unsigned m = 4;
    std::uint64_t n_paths = 100000;
    double step = 2e-4;
    double horizon = 0.0;  // 0 -> 16 * max(x2, -y1)^2 of the window
    double max_censored_frac = 1e-3;
    unsigned workers = 1;
};

struct HistogramBlockStats {
    std::vector<double> sum, sumsq;  // m*m cells, row-major in x then y
    std::uint64_t n = 0, censored = 0;
    void fold(const HistogramBlockStats& o);
};

HistogramBlockStats histogram_block(double kappa, const HistogramOptions& opt,
                                    RngSpec rng, std::uint64_t block);
inline std::uint64_t histogram_blocks(const HistogramOptions& opt) {
    return (opt.n_paths + kOccupationBlock - 1) / kOccupationBlock;
}

struct HistogramCell {
    Rect cell;
    double mean = 0.0, se = 0.0, green_int = 0.0, z = 0.0;
};

struct OccupationHistogram {
    Rect window;
    unsigned m = 0;
    std::vector<HistogramCell> cells;
    double pooled_ratio = 0.0;  // sum(mean)/sum(green) = 1/C1 estimate
    double chi_square = 0.0;
    unsigned dof = 0;
    double chi_square_crit_1pct = 0.0;
    bool pass = false;
    double chi_square_wrong = 0.0;  // against a flat density
    bool wrong_fails = false;
    std::uint64_t n = 0, censored = 0;
    double step = 0.0;
};

OccupationHistogram assemble_histogram(double kappa, const HistogramOptions& opt,
                                       RngSpec rng, const HistogramBlockStats& folded);
OccupationHistogram occupation_histogram(double kappa, const HistogramOptions& opt,
                                         RngSpec rng);

// ---------------------------------------------------------------------------
// Endpoint of the extended driver: the welding curve at the recorded
// lifetime should sit at the force points, Phi(T) = (x, y), up to
// discretization.
// ---------------------------------------------------------------------------

struct EndpointOptions {
    std::uint64_t n = 400;
    double step = 2e-4;
    double delta_frac = 0.1;  // hull probes at (1 -/+ delta) T
    unsigned workers = 1;
};

struct EndpointCheck {
    double mean_abs_dx = 0.0;  // E|d_T - x|
    double mean_abs_dy = 0.0;  // E|c_T - y|
    double frac_excluded_before = 0.0;
    double frac_included_after = 0.0;
    std::uint64_t n = 0;
    double step = 0.0;
};

EndpointCheck extended_endpoint_check(double kappa, double x, double y,
                                      const EndpointOptions& opt, RngSpec rng);

// ---------------------------------------------------------------------------
// Lifetime law equivalence: T sampled from the raw rho-driver vs T from the
// reduced-diffusion formula, as a two-sample KS test with a step-halving
// stability probe.
// ---------------------------------------------------------------------------

struct LawEquivalenceOptions {
    std::uint64_t n = 10000;
    double rho_step = 1e-3;
    double bessel_step = 1e-3;
    double tail_tol = 1e-9;
    unsigned workers = 1;
};

struct LawEquivalence {
    double ks = 0.0, ks_half = 0.0;
    double critical_1pct = 0.0;
    bool pass = false;
    std::uint64_t n = 0;
};

LawEquivalence lifetime_law_equivalence(double kappa, double x, double y,
                                        const LawEquivalenceOptions& opt, RngSpec rng);

// ---------------------------------------------------------------------------
// Full verification run.
// ---------------------------------------------------------------------------

struct VerifyConfig {
    double kappa = 4.0;
    std::uint64_t seed = 1;
    unsigned workers = 1;

    LawEquivalenceOptions law;
    double law_x = 1.0, law_y = -1.0;

    std::uint64_t n_martingale = 20000;
    double martingale_step = 2e-5;
    double martingale_cap = 10.0;
    std::vector<double> martingale_times{0.01, 0.02};
    double mart_x = 1.0, mart_y = -1.0;

    std::uint64_t n_girsanov = 20000;
    double girsanov_step = 1e-4;
    double girsanov_t = 0.01;

    C1LifetimeOptions c1_lifetime;
    OccupationOptions occupation_a;
    OccupationOptions occupation_b;
    HistogramOptions histogram;
};

struct CheckLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerificationReport {
    VerifyConfig config;
    LawEquivalence law;
    std::vector<MartingaleCheckPoint> martingale;
    GirsanovCheck girsanov;
    C1Lifetime c1_lifetime;
    C1Occupation c1_occupation_a;
    C1Occupation c1_occupation_b;
    OccupationHistogram histogram;
    std::vector<CheckLine> checks;
    bool pass = false;
};

VerificationReport verify_theorem(const VerifyConfig& config);
std::string verification_json(const VerificationReport& report);

// Thrown when a progress callback cancels a run.
struct RunAborted : std::runtime_error {
    RunAborted() : std::runtime_error("run aborted by progress callback") {}
};

// Called after each completed unit of work (a stage, a block of paths or a
// quadrature node); returning false cancels the run. A checkpoint, when
// configured, has already been written at that point.
using ProgressFn =
    std::function<bool(const std::string& stage, std::uint64_t done, std::uint64_t total)>;

// verify_theorem with periodic partial-sum snapshots: interrupted runs
// resume from checkpoint_path and produce the identical report.
VerificationReport verify_theorem_checkpointed(const VerifyConfig& config,
                                               const std::string& checkpoint_path,
                                               const ProgressFn& progress = {});

}  // namespace bsle
