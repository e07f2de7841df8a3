#include "bsle/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bsle/checkpoint.hpp"
#include "bsle/parallel.hpp"
#include "bsle/quadrature.hpp"
#include "bsle/sde.hpp"
#include "bsle/stats.hpp"

namespace bsle {

namespace {

// Stream-space stride between independent estimator stages.
constexpr std::uint64_t kStageStride = 1ull << 42;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Lifetime route
// ---------------------------------------------------------------------------

C1NodeEstimate c1_lifetime_node(double kappa, const C1LifetimeOptions& opt,
                                RngSpec rng, unsigned node) {
    if (node >= opt.s_cells) throw std::invalid_argument("node out of range");
    const double s = (static_cast<double>(node) + 0.5) / opt.s_cells;
    const double horizon = bessel_horizon(kappa, 1.0, opt.tail_tol);
    const EstimateReport rep = mean_inverse_lifetime(
        kappa, s, opt.n_per_s,
        RngSpec{rng.seed, rng.stream + static_cast<std::uint64_t>(node) * opt.n_per_s},
        horizon, opt.tail_tol, opt.bessel_step, opt.workers);
    return {s, rep.value, rep.std_error, rep.n};
}

C1Lifetime assemble_c1_lifetime(double kappa, const C1LifetimeOptions& opt,
                                RngSpec rng, std::vector<C1NodeEstimate> nodes) {
    if (nodes.size() != opt.s_cells) {
        throw std::invalid_argument("assemble_c1_lifetime: node count mismatch");
    }
    const GreenParams p = GreenParams::minus44(kappa);
    const double ds = 1.0 / opt.s_cells;
    double value = 0.0, var = 0.0;
    unsigned over = 0;
    for (const auto& nd : nodes) {
        const double g = green(p, nd.s, nd.s - 1.0);
        const double w = ds * g * 0.5;
        value += w * nd.mean_inv_T;
        var += w * w * nd.se_inv_T * nd.se_inv_T;
        if (w * nd.se_inv_T > opt.quad_tol) ++over;
    }
    C1Lifetime out;
    out.report.value = value;
    out.report.std_error = std::sqrt(var);
    out.report.n = static_cast<std::uint64_t>(opt.s_cells) * opt.n_per_s;
    out.report.seed = rng.seed;
    out.report.stream_base = rng.stream;
    out.report.step = opt.bessel_step;
    out.report.horizon = bessel_horizon(kappa, 1.0, opt.tail_tol);
    out.report.tail_tol = opt.tail_tol;
    out.nodes = std::move(nodes);
    out.nodes_over_tol = over;
    return out;
}

C1Lifetime estimate_c1_lifetime(double kappa, const C1LifetimeOptions& opt,
                                RngSpec rng) {
    std::vector<C1NodeEstimate> nodes(opt.s_cells);
    for (unsigned j = 0; j < opt.s_cells; ++j) {
        nodes[j] = c1_lifetime_node(kappa, opt, rng, j);
    }
    return assemble_c1_lifetime(kappa, opt, rng, std::move(nodes));
}

C1OracleComparison c1_oracle_comparison(double kappa, const C1OracleOptions& opt,
                                        RngSpec rng) {
    const GreenParams p = GreenParams::minus44(kappa);
    C1OracleComparison out;

    // 2-D midpoint Riemann sum over (0, L] x [-L, 0): exact Green mass per
    // cell times the swallowing probability sampled at the cell center.
    {
        const unsigned m = opt.grid_m;
        const double dx = opt.L / m;
        const std::size_t cells = static_cast<std::size_t>(m) * m;
        const std::size_t total = cells * opt.n_per_cell;
        std::vector<double> hits(total);
        parallel_for(total, opt.workers, [&](std::size_t idx) {
            const std::size_t c = idx / opt.n_per_cell;
            const unsigned i = static_cast<unsigned>(c / m);
            const unsigned j = static_cast<unsigned>(c % m);
            const double xc = (i + 0.5) * dx;
            const double yc = -opt.L + (j + 0.5) * dx;
            const double gap = xc - yc;
            const double w0 = (xc + yc) / gap;
            const LifetimeEstimate est =
                sample_lifetime(kappa, w0, xc, yc, opt.bessel_step, opt.tail_tol,
                                RngSpec{rng.seed, rng.stream + idx});
            hits[idx] = (est.value + 0.5 * est.tail_bound) <= 1.0 ? 1.0 : 0.0;
        });
        double value = 0.0, var = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            const unsigned i = static_cast<unsigned>(c / m);
            const unsigned j = static_cast<unsigned>(c % m);
            const double ig = integrate_rect(
                [&](double x, double y) { return green(p, x, y); }, i * dx,
                (i + 1) * dx, -opt.L + j * dx, -opt.L + (j + 1) * dx, 1e-6);
            const std::span<const double> cell_hits(hits.data() + c * opt.n_per_cell,
                                                    opt.n_per_cell);
            const double ph = sample_mean(cell_hits);
            const double se =
                std::sqrt(ph * (1.0 - ph) / static_cast<double>(opt.n_per_cell));
            value += ig * ph;
            var += ig * se * ig * se;
        }
        out.grid_value = value;
        out.grid_se = std::sqrt(var);
    }

    // s-line route restricted to the same square: the inner r-integral over
    // {(rs, r(s-1)) in square} is E[min(Rmax^2, 1/T)]/2 with
    // Rmax = L / max(s, 1-s).
    {
        const double ds = 1.0 / opt.s_cells;
        const double horizon = bessel_horizon(kappa, 1.0, opt.tail_tol);
        const std::uint64_t line_base = rng.stream + kStageStride;
        std::vector<double> capped_node(opt.s_cells), capped_se(opt.s_cells),
            full_node(opt.s_cells);
        for (unsigned j = 0; j < opt.s_cells; ++j) {
            const double s = (j + 0.5) * ds;
            const double rmax = opt.L / std::max(s, 1.0 - s);
            const double cap = rmax * rmax;
            const double w0 = 2.0 * s - 1.0;
            std::vector<double> capped(opt.n_per_s), full(opt.n_per_s);
            parallel_for(opt.n_per_s, opt.workers, [&](std::size_t i) {
                const LifetimeEstimate est = sample_lifetime_with_horizon(
                    kappa, w0, s, s - 1.0, opt.bessel_step, horizon,
                    RngSpec{rng.seed, line_base + j * opt.n_per_s + i});
                const double inv =
                    0.5 * (1.0 / est.value + 1.0 / (est.value + est.tail_bound));
                full[i] = inv;
                capped[i] = inv < cap ? inv : cap;
            });
            capped_node[j] = sample_mean(capped);
            capped_se[j] = sample_se(capped, capped_node[j]);
            full_node[j] = sample_mean(full);
        }
        double line = 0.0, line_var = 0.0, full_line = 0.0;
        for (unsigned j = 0; j < opt.s_cells; ++j) {
            const double s = (j + 0.5) * ds;
            const double w = ds * green(p, s, s - 1.0) * 0.5;
            line += w * capped_node[j];
            full_line += w * full_node[j];
            line_var += w * w * capped_se[j] * capped_se[j];
        }
        out.line_value = line;
        out.line_se = std::sqrt(line_var);
        out.full_line_value = full_line;
        out.truncation_gap = full_line - line;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Occupation route
// ---------------------------------------------------------------------------

OccupationBlockStats occupation_block(double kappa, const OccupationOptions& opt,
                                      RngSpec rng, std::uint64_t block,
                                      std::vector<OccupationPathRow>* rows) {
    opt.rect.validate();
    const double horizon = occupation_horizon(opt);
    const auto max_steps = static_cast<std::uint64_t>(std::ceil(horizon / opt.step));
    const std::uint64_t i0 = block * kOccupationBlock;
    if (i0 >= opt.n_paths) throw std::invalid_argument("occupation_block: block out of range");
    const std::uint64_t i1 = std::min(opt.n_paths, i0 + kOccupationBlock);
    const std::size_t bn = i1 - i0;

    std::vector<double> vals(bn, 0.0);
    std::vector<std::uint8_t> cens(bn, 0);
    const double sigma = std::sqrt(kappa * opt.step);
    parallel_for(bn, opt.workers, [&](std::size_t k) {
        Philox gen(RngSpec{rng.seed, rng.stream + i0 + k});
        TauSweep sweep({opt.rect.x1, opt.rect.x2, opt.rect.y1, opt.rect.y2}, opt.step);
        double lambda = 0.0;
        bool alive = true;
        for (std::uint64_t st = 0; st < max_steps && alive; ++st) {
            alive = sweep.advance(lambda);
            lambda += sigma * gen.next_normal();
        }
        if (alive) {
            cens[k] = 1;
        } else {
            const auto& r = sweep.results();
            vals[k] = occupation_from_corners(r[0].tau, r[1].tau, r[2].tau, r[3].tau);
        }
    });

    OccupationBlockStats stats;
    for (std::size_t k = 0; k < bn; ++k) {
        if (cens[k]) {
            ++stats.censored;
        } else {
            stats.sum += vals[k];
            stats.sumsq += vals[k] * vals[k];
        }
        ++stats.n;
        if (rows) {
            rows->push_back({i0 + k, rng.stream + i0 + k, vals[k], cens[k] != 0});
        }
    }
    return stats;
}

C1Occupation assemble_c1_occupation(double kappa, const OccupationOptions& opt,
                                    RngSpec rng, const OccupationBlockStats& folded) {
    if (folded.n != opt.n_paths) {
        throw std::invalid_argument("assemble_c1_occupation: incomplete fold");
    }
    const GreenParams p = GreenParams::minus44(kappa);
    C1Occupation out;
    out.green_int = green_integral(p, opt.rect);
    out.censored = folded.censored;
    const auto nc = static_cast<double>(folded.n - folded.censored);
    const double frac = static_cast<double>(folded.censored) / static_cast<double>(folded.n);
    out.censor_bias_bound = frac * occupation_horizon(opt);
    if (nc >= 2.0) {
        out.mean_occupation = folded.sum / nc;
        const double var = (folded.sumsq - nc * out.mean_occupation * out.mean_occupation) /
                           (nc * (nc - 1.0));
        out.se_occupation = var > 0.0 ? std::sqrt(var) : 0.0;
    }
    out.valid = frac <= opt.max_censored_frac && out.mean_occupation > 0.0;
    out.c1.value = out.valid ? out.green_int / out.mean_occupation : 0.0;
    out.c1.std_error = out.valid ? out.green_int * out.se_occupation /
                                       (out.mean_occupation * out.mean_occupation)
                                 : 0.0;
    out.c1.n = opt.n_paths;
    out.c1.seed = rng.seed;
    out.c1.stream_base = rng.stream;
    out.c1.step = opt.step;
    out.c1.horizon = occupation_horizon(opt);
    return out;
}

C1Occupation estimate_c1_occupation(double kappa, const OccupationOptions& opt,
                                    RngSpec rng) {
    OccupationBlockStats folded;
    const std::uint64_t blocks = occupation_blocks(opt);
    for (std::uint64_t b = 0; b < blocks; ++b) {
        folded.fold(occupation_block(kappa, opt, rng, b));
    }
    return assemble_c1_occupation(kappa, opt, rng, folded);
}

// ---------------------------------------------------------------------------
// Histogram
// ---------------------------------------------------------------------------

void HistogramBlockStats::fold(const HistogramBlockStats& o) {
    if (sum.empty()) {
        sum = o.sum;
        sumsq = o.sumsq;
    } else {
        for (std::size_t c = 0; c < sum.size(); ++c) {
            sum[c] += o.sum[c];
            sumsq[c] += o.sumsq[c];
        }
    }
    n += o.n;
    censored += o.censored;
}

HistogramBlockStats histogram_block(double kappa, const HistogramOptions& opt,
                                    RngSpec rng, std::uint64_t block) {
    opt.window.validate();
    if (opt.m < 2) throw std::invalid_argument("histogram: need m >= 2");
    const unsigned m = opt.m;
    const std::size_t cells = static_cast<std::size_t>(m) * m;
    const double dx = (opt.window.x2 - opt.window.x1) / m;
    const double dy = (opt.window.y2 - opt.window.y1) / m;
    OccupationOptions probe;
    probe.rect = opt.window;
    probe.horizon = opt.horizon;
    const double horizon = occupation_horizon(probe);
    const auto max_steps = static_cast<std::uint64_t>(std::ceil(horizon / opt.step));

    const std::uint64_t i0 = block * kOccupationBlock;
    if (i0 >= opt.n_paths) throw std::invalid_argument("histogram_block: block out of range");
    const std::uint64_t i1 = std::min(opt.n_paths, i0 + kOccupationBlock);
    const std::size_t bn = i1 - i0;

    std::vector<double> lines(2 * (m + 1));
    for (unsigned i = 0; i <= m; ++i) lines[i] = opt.window.x1 + i * dx;
    for (unsigned j = 0; j <= m; ++j) lines[m + 1 + j] = opt.window.y1 + j * dy;

    std::vector<double> vals(bn * cells, 0.0);
    std::vector<std::uint8_t> cens(bn, 0);
    const double sigma = std::sqrt(kappa * opt.step);
    parallel_for(bn, opt.workers, [&](std::size_t k) {
        Philox gen(RngSpec{rng.seed, rng.stream + i0 + k});
        TauSweep sweep(lines, opt.step);
        double lambda = 0.0;
        bool alive = true;
        for (std::uint64_t st = 0; st < max_steps && alive; ++st) {
            alive = sweep.advance(lambda);
            lambda += sigma * gen.next_normal();
        }
        if (alive) {
            cens[k] = 1;
            return;
        }
        const auto& r = sweep.results();
        for (unsigned i = 0; i < m; ++i) {
            for (unsigned j = 0; j < m; ++j) {
                vals[k * cells + i * m + j] = occupation_from_corners(
                    r[i].tau, r[i + 1].tau, r[m + 1 + j].tau, r[m + 2 + j].tau);
            }
        }
    });

    HistogramBlockStats stats;
    stats.sum.assign(cells, 0.0);
    stats.sumsq.assign(cells, 0.0);
    for (std::size_t k = 0; k < bn; ++k) {
        ++stats.n;
        if (cens[k]) {
            ++stats.censored;
            continue;
        }
        for (std::size_t c = 0; c < cells; ++c) {
            const double v = vals[k * cells + c];
            stats.sum[c] += v;
            stats.sumsq[c] += v * v;
        }
    }
    return stats;
}

OccupationHistogram assemble_histogram(double kappa, const HistogramOptions& opt,
                                       RngSpec rng, const HistogramBlockStats& folded) {
    if (folded.n != opt.n_paths) {
        throw std::invalid_argument("assemble_histogram: incomplete fold");
    }
    const GreenParams p = GreenParams::minus44(kappa);
    const unsigned m = opt.m;
    const std::size_t cells = static_cast<std::size_t>(m) * m;
    const double dx = (opt.window.x2 - opt.window.x1) / m;
    const double dy = (opt.window.y2 - opt.window.y1) / m;
    const auto nc = static_cast<double>(folded.n - folded.censored);

    OccupationHistogram out;
    out.window = opt.window;
    out.m = m;
    out.n = folded.n;
    out.censored = folded.censored;
    out.step = opt.step;
    out.cells.resize(cells);

    double sum_mean = 0.0, sum_green = 0.0, sum_area = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        const unsigned i = static_cast<unsigned>(c) / m;
        const unsigned j = static_cast<unsigned>(c) % m;
        HistogramCell& cell = out.cells[c];
        cell.cell = Rect{opt.window.x1 + i * dx, opt.window.x1 + (i + 1) * dx,
                         opt.window.y1 + j * dy, opt.window.y1 + (j + 1) * dy};
        cell.mean = folded.sum[c] / nc;
        const double var = (folded.sumsq[c] - nc * cell.mean * cell.mean) /
                           (nc * (nc - 1.0));
        cell.se = var > 0.0 ? std::sqrt(var) : 0.0;
        cell.green_int = green_integral(p, cell.cell);
        sum_mean += cell.mean;
        sum_green += cell.green_int;
        sum_area += dx * dy;
    }
    out.pooled_ratio = sum_mean / sum_green;
    const double pooled_wrong = sum_mean / sum_area;
    double chi2 = 0.0, chi2w = 0.0;
    for (auto& cell : out.cells) {
        cell.z = cell.se > 0.0 ? (cell.mean - out.pooled_ratio * cell.green_int) / cell.se
                               : 0.0;
        chi2 += cell.z * cell.z;
        const double zw = cell.se > 0.0
                              ? (cell.mean - pooled_wrong * dx * dy) / cell.se
                              : 0.0;
        chi2w += zw * zw;
    }
    out.chi_square = chi2;
    out.chi_square_wrong = chi2w;
    out.dof = static_cast<unsigned>(cells) - 1;
    out.chi_square_crit_1pct = chi2_quantile(0.99, out.dof);
    out.pass = chi2 < out.chi_square_crit_1pct &&
               static_cast<double>(folded.censored) / static_cast<double>(folded.n) <=
                   opt.max_censored_frac;
    out.wrong_fails = chi2w > out.chi_square_crit_1pct;
    return out;
}

OccupationHistogram occupation_histogram(double kappa, const HistogramOptions& opt,
                                         RngSpec rng) {
    HistogramBlockStats folded;
    const std::uint64_t blocks = histogram_blocks(opt);
    for (std::uint64_t b = 0; b < blocks; ++b) {
        folded.fold(histogram_block(kappa, opt, rng, b));
    }
    return assemble_histogram(kappa, opt, rng, folded);
}

// ---------------------------------------------------------------------------
// Extended-driver endpoint
// ---------------------------------------------------------------------------

namespace {

bool swallowed_by(double z, const DrivingPath& path, double t) {
    return evolve_point(z, path, t).status == PointStatus::swallowed;
}

// sup{z on the given side : tau_z <= t} by bisection on the monotone
// swallowing predicate. side = +1 probes the positive axis, -1 the negative.
double hull_edge(const DrivingPath& path, double t, double scale, int side) {
    double lo = 0.05 * scale;  // assumed swallowed
    double hi = 2.0 * scale;
    int guard = 0;
    while (!swallowed_by(side * lo, path, t) && ++guard < 40) lo *= 0.5;
    guard = 0;
    while (swallowed_by(side * hi, path, t) && ++guard < 40) hi *= 2.0;
    for (int it = 0; it < 46; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (swallowed_by(side * mid, path, t)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return side * 0.5 * (lo + hi);
}

}  // namespace

EndpointCheck extended_endpoint_check(double kappa, double x, double y,
                                      const EndpointOptions& opt, RngSpec rng) {
    if (!(x > 0.0 && y < 0.0)) throw std::invalid_argument("need x > 0 > y");
    std::vector<double> dxs(opt.n), dys(opt.n);
    std::vector<std::uint8_t> excl(opt.n, 0), incl(opt.n, 0);
    parallel_for(opt.n, opt.workers, [&](std::size_t i) {
        const RhoDriverResult rho = sample_rho_driver(
            kappa, -4.0, -4.0, x, y, opt.step, RngSpec{rng.seed, rng.stream + i});
        const DrivingPath ext =
            extend_driver(rho, opt.step, 1.25 * rho.T + 8.0 * opt.step,
                          RngSpec{rng.seed, rng.stream + kStageStride + i});
        const double dT = hull_edge(ext, rho.T, x, +1);
        const double cT = hull_edge(ext, rho.T, -y, -1);
        dxs[i] = std::fabs(dT - x);
        dys[i] = std::fabs(cT - y);
        const double before = (1.0 - opt.delta_frac) * rho.T;
        const double after = (1.0 + opt.delta_frac) * rho.T;
        excl[i] = !swallowed_by(x, ext, before) && !swallowed_by(y, ext, before);
        incl[i] = swallowed_by(x, ext, after) && swallowed_by(y, ext, after);
    });
    EndpointCheck out;
    out.mean_abs_dx = sample_mean(dxs);
    out.mean_abs_dy = sample_mean(dys);
    double se = 0.0, si = 0.0;
    for (std::size_t i = 0; i < opt.n; ++i) {
        se += excl[i];
        si += incl[i];
    }
    out.frac_excluded_before = se / static_cast<double>(opt.n);
    out.frac_included_after = si / static_cast<double>(opt.n);
    out.n = opt.n;
    out.step = opt.step;
    return out;
}

// ---------------------------------------------------------------------------
// Lifetime law equivalence
// ---------------------------------------------------------------------------

namespace {

std::vector<double> rho_lifetimes(double kappa, double x, double y, double step,
                                  std::uint64_t n, RngSpec rng, unsigned workers) {
    std::vector<double> out(n);
    parallel_for(n, workers, [&](std::size_t i) {
        out[i] = rho_lifetime(kappa, -4.0, -4.0, x, y, step,
                              RngSpec{rng.seed, rng.stream + i});
    });
    return out;
}

std::vector<double> bessel_lifetimes(double kappa, double x, double y, double step,
                                     double tail_tol, std::uint64_t n, RngSpec rng,
                                     unsigned workers) {
    const double gap = x - y;
    const double s = x / gap;
    const double w0 = 2.0 * s - 1.0;
    std::vector<double> out(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const LifetimeEstimate est =
            sample_lifetime(kappa, w0, s, s - 1.0, step, tail_tol,
                            RngSpec{rng.seed, rng.stream + i});
        out[i] = (est.value + 0.5 * est.tail_bound) * gap * gap;
    });
    return out;
}

}  // namespace

LawEquivalence lifetime_law_equivalence(double kappa, double x, double y,
                                        const LawEquivalenceOptions& opt, RngSpec rng) {
    LawEquivalence out;
    out.n = opt.n;
    out.critical_1pct = ks_critical(opt.n, opt.n, 0.01);
    const std::uint64_t n = opt.n;
    const auto a = rho_lifetimes(kappa, x, y, opt.rho_step, n,
                                 RngSpec{rng.seed, rng.stream}, opt.workers);
    const auto b = bessel_lifetimes(kappa, x, y, opt.bessel_step, opt.tail_tol, n,
                                    RngSpec{rng.seed, rng.stream + n}, opt.workers);
    out.ks = ks_statistic(a, b);
    const auto ah = rho_lifetimes(kappa, x, y, 0.5 * opt.rho_step, n,
                                  RngSpec{rng.seed, rng.stream + 2 * n}, opt.workers);
    const auto bh = bessel_lifetimes(kappa, x, y, 0.5 * opt.bessel_step, opt.tail_tol,
                                     n, RngSpec{rng.seed, rng.stream + 3 * n},
                                     opt.workers);
    out.ks_half = ks_statistic(ah, bh);
    out.pass = out.ks < out.critical_1pct && out.ks_half < out.critical_1pct &&
               std::fabs(out.ks - out.ks_half) < 0.5 * out.critical_1pct;
    return out;
}

// ---------------------------------------------------------------------------
// verify_theorem
// ---------------------------------------------------------------------------

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json json_of(const EstimateReport& r) {
    return ordered_json{{"value", r.value},     {"std_error", r.std_error},
                        {"n", r.n},             {"seed", r.seed},
                        {"stream_base", r.stream_base}, {"step", r.step},
                        {"horizon", r.horizon}, {"tail_tol", r.tail_tol}};
}

EstimateReport report_from(const ordered_json& j) {
    EstimateReport r;
    r.value = j["value"];
    r.std_error = j["std_error"];
    r.n = j["n"];
    r.seed = j["seed"];
    r.stream_base = j["stream_base"];
    r.step = j["step"];
    r.horizon = j["horizon"];
    r.tail_tol = j["tail_tol"];
    return r;
}

ordered_json json_of(const LawEquivalence& l) {
    return ordered_json{{"ks", l.ks}, {"ks_half", l.ks_half},
                        {"critical_1pct", l.critical_1pct}, {"n", l.n},
                        {"pass", l.pass}};
}

LawEquivalence law_from(const ordered_json& j) {
    LawEquivalence l;
    l.ks = j["ks"];
    l.ks_half = j["ks_half"];
    l.critical_1pct = j["critical_1pct"];
    l.n = j["n"];
    l.pass = j["pass"];
    return l;
}

ordered_json json_of(const std::vector<MartingaleCheckPoint>& pts) {
    ordered_json arr = ordered_json::array();
    for (const auto& mp : pts) {
        arr.push_back(ordered_json{{"t", mp.t},
                                   {"m0", mp.m0},
                                   {"stopped_mean", json_of(mp.stopped_mean)},
                                   {"z", mp.z}});
    }
    return arr;
}

std::vector<MartingaleCheckPoint> martingale_from(const ordered_json& arr) {
    std::vector<MartingaleCheckPoint> out;
    for (const auto& j : arr) {
        MartingaleCheckPoint mp;
        mp.t = j["t"];
        mp.m0 = j["m0"];
        mp.stopped_mean = report_from(j["stopped_mean"]);
        mp.z = j["z"];
        out.push_back(mp);
    }
    return out;
}

ordered_json json_of(const GirsanovCheck& g) {
    return ordered_json{{"weighted_bm", json_of(g.weighted_bm)},
                        {"direct_rho", json_of(g.direct_rho)},
                        {"diff", g.diff},
                        {"combined_se", g.combined_se},
                        {"z", g.z}};
}

GirsanovCheck girsanov_from(const ordered_json& j) {
    GirsanovCheck g;
    g.weighted_bm = report_from(j["weighted_bm"]);
    g.direct_rho = report_from(j["direct_rho"]);
    g.diff = j["diff"];
    g.combined_se = j["combined_se"];
    g.z = j["z"];
    return g;
}

ordered_json json_of(const OccupationBlockStats& s, std::uint64_t blocks_done) {
    return ordered_json{{"blocks_done", blocks_done}, {"sum", s.sum},
                        {"sumsq", s.sumsq}, {"n", s.n}, {"censored", s.censored}};
}

ordered_json json_of(const HistogramBlockStats& s, std::uint64_t blocks_done) {
    return ordered_json{{"blocks_done", blocks_done}, {"sum", s.sum},
                        {"sumsq", s.sumsq}, {"n", s.n}, {"censored", s.censored}};
}

ordered_json scientific_config_json(const VerifyConfig& c) {
    auto rect_json = [](const Rect& r) {
        return ordered_json{{"x1", r.x1}, {"x2", r.x2}, {"y1", r.y1}, {"y2", r.y2}};
    };
    return ordered_json{
        {"kappa", c.kappa},
        {"seed", c.seed},
        {"law", {{"n", c.law.n}, {"rho_step", c.law.rho_step},
                 {"bessel_step", c.law.bessel_step}, {"tail_tol", c.law.tail_tol},
                 {"x", c.law_x}, {"y", c.law_y}}},
        {"martingale", {{"n", c.n_martingale}, {"step", c.martingale_step},
                        {"cap", c.martingale_cap}, {"times", c.martingale_times},
                        {"x", c.mart_x}, {"y", c.mart_y}}},
        {"girsanov", {{"n", c.n_girsanov}, {"step", c.girsanov_step},
                      {"t", c.girsanov_t}}},
        {"c1_lifetime", {{"s_cells", c.c1_lifetime.s_cells},
                         {"n_per_s", c.c1_lifetime.n_per_s},
                         {"bessel_step", c.c1_lifetime.bessel_step},
                         {"tail_tol", c.c1_lifetime.tail_tol}}},
        {"occupation_a", {{"rect", rect_json(c.occupation_a.rect)},
                          {"n_paths", c.occupation_a.n_paths},
                          {"step", c.occupation_a.step}}},
        {"occupation_b", {{"rect", rect_json(c.occupation_b.rect)},
                          {"n_paths", c.occupation_b.n_paths},
                          {"step", c.occupation_b.step}}},
        {"histogram", {{"window", rect_json(c.histogram.window)},
                       {"m", c.histogram.m},
                       {"n_paths", c.histogram.n_paths},
                       {"step", c.histogram.step}}}};
}

}  // namespace

VerificationReport verify_theorem_checkpointed(const VerifyConfig& config_in,
                                               const std::string& checkpoint_path,
                                               const ProgressFn& progress) {
    VerifyConfig cfg = config_in;
    cfg.law.workers = cfg.workers;
    cfg.c1_lifetime.workers = cfg.workers;
    cfg.occupation_a.workers = cfg.workers;
    cfg.occupation_b.workers = cfg.workers;
    cfg.histogram.workers = cfg.workers;

    const std::string fingerprint =
        "verify:" + std::to_string(fnv1a64(scientific_config_json(cfg).dump()));
    ordered_json stages = ordered_json::object();
    if (!checkpoint_path.empty()) {
        if (auto loaded = load_checkpoint_file(checkpoint_path, fingerprint)) {
            stages = *loaded;
        }
    }
    auto tick = [&](const std::string& stage, std::uint64_t done, std::uint64_t total) {
        if (!checkpoint_path.empty()) {
            save_checkpoint_file(checkpoint_path, fingerprint, stages);
        }
        if (progress && !progress(stage, done, total)) throw RunAborted{};
    };

    VerificationReport rep;
    rep.config = cfg;
    const RngSpec root{cfg.seed, 0};

    if (!stages.contains("law")) {
        rep.law = lifetime_law_equivalence(cfg.kappa, cfg.law_x, cfg.law_y, cfg.law,
                                           RngSpec{root.seed, 0});
        stages["law"] = json_of(rep.law);
        tick("law_equivalence", 1, 1);
    } else {
        rep.law = law_from(stages["law"]);
    }

    if (!stages.contains("martingale")) {
        rep.martingale = martingale_check(cfg.kappa, cfg.mart_x, cfg.mart_y,
                                          cfg.martingale_times, cfg.martingale_cap,
                                          cfg.n_martingale, cfg.martingale_step,
                                          RngSpec{root.seed, kStageStride}, cfg.workers);
        stages["martingale"] = json_of(rep.martingale);
        tick("martingale", 1, 1);
    } else {
        rep.martingale = martingale_from(stages["martingale"]);
    }

    if (!stages.contains("girsanov")) {
        rep.girsanov = girsanov_transfer_check(
            cfg.kappa, cfg.mart_x, cfg.mart_y, cfg.girsanov_t, cfg.n_girsanov,
            cfg.girsanov_step, RngSpec{root.seed, 2 * kStageStride}, cfg.workers);
        stages["girsanov"] = json_of(rep.girsanov);
        tick("girsanov", 1, 1);
    } else {
        rep.girsanov = girsanov_from(stages["girsanov"]);
    }

    // Lifetime route, resumable node by node.
    {
        if (!stages.contains("c1_nodes")) stages["c1_nodes"] = ordered_json::array();
        std::vector<C1NodeEstimate> nodes;
        for (const auto& j : stages["c1_nodes"]) {
            nodes.push_back({j["s"], j["mean_inv_T"], j["se_inv_T"], j["n"]});
        }
        const RngSpec rng{root.seed, 3 * kStageStride};
        while (nodes.size() < cfg.c1_lifetime.s_cells) {
            const auto nd = c1_lifetime_node(cfg.kappa, cfg.c1_lifetime, rng,
                                             static_cast<unsigned>(nodes.size()));
            nodes.push_back(nd);
            stages["c1_nodes"].push_back(ordered_json{{"s", nd.s},
                                                      {"mean_inv_T", nd.mean_inv_T},
                                                      {"se_inv_T", nd.se_inv_T},
                                                      {"n", nd.n}});
            tick("c1_lifetime", nodes.size(), cfg.c1_lifetime.s_cells);
        }
        rep.c1_lifetime =
            assemble_c1_lifetime(cfg.kappa, cfg.c1_lifetime, rng, std::move(nodes));
    }

    // Occupation route, resumable block by block.
    auto run_occupation = [&](const char* key, const OccupationOptions& opt,
                              std::uint64_t stream) {
        OccupationBlockStats folded;
        std::uint64_t done = 0;
        if (stages.contains(key)) {
            const auto& j = stages[key];
            done = j["blocks_done"];
            folded.sum = j["sum"];
            folded.sumsq = j["sumsq"];
            folded.n = j["n"];
            folded.censored = j["censored"];
        }
        const std::uint64_t total = occupation_blocks(opt);
        const RngSpec rng{root.seed, stream};
        while (done < total) {
            folded.fold(occupation_block(cfg.kappa, opt, rng, done));
            ++done;
            stages[key] = json_of(folded, done);
            tick(key, done, total);
        }
        return assemble_c1_occupation(cfg.kappa, opt, rng, folded);
    };
    rep.c1_occupation_a = run_occupation("occupation_a", cfg.occupation_a,
                                         4 * kStageStride);
    rep.c1_occupation_b = run_occupation("occupation_b", cfg.occupation_b,
                                         5 * kStageStride);

    {
        HistogramBlockStats folded;
        std::uint64_t done = 0;
        if (stages.contains("histogram")) {
            const auto& j = stages["histogram"];
            done = j["blocks_done"];
            folded.sum = j["sum"].get<std::vector<double>>();
            folded.sumsq = j["sumsq"].get<std::vector<double>>();
            folded.n = j["n"];
            folded.censored = j["censored"];
        }
        const std::uint64_t total = histogram_blocks(cfg.histogram);
        const RngSpec rng{root.seed, 6 * kStageStride};
        while (done < total) {
            folded.fold(histogram_block(cfg.kappa, cfg.histogram, rng, done));
            ++done;
            stages["histogram"] = json_of(folded, done);
            tick("histogram", done, total);
        }
        rep.histogram = assemble_histogram(cfg.kappa, cfg.histogram, rng, folded);
    }

    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        rep.checks.push_back({name, pass, detail});
    };

    add("law_equivalence", rep.law.pass,
        "ks=" + fmt(rep.law.ks) + " ks_half=" + fmt(rep.law.ks_half) +
            " crit=" + fmt(rep.law.critical_1pct));
    for (const auto& mp : rep.martingale) {
        add("martingale_t=" + fmt(mp.t), std::fabs(mp.z) <= 3.0,
            "mean=" + fmt(mp.stopped_mean.value) + " M0=" + fmt(mp.m0) +
                " z=" + fmt(mp.z));
    }
    add("girsanov_transfer", std::fabs(rep.girsanov.z) <= 3.0,
        "bm=" + fmt(rep.girsanov.weighted_bm.value) +
            " rho=" + fmt(rep.girsanov.direct_rho.value) + " z=" + fmt(rep.girsanov.z));

    const double v1 = rep.c1_lifetime.report.value;
    const double v2 = rep.c1_occupation_a.c1.value;
    const double se12 = std::sqrt(rep.c1_lifetime.report.std_error *
                                      rep.c1_lifetime.report.std_error +
                                  rep.c1_occupation_a.c1.std_error *
                                      rep.c1_occupation_a.c1.std_error);
    const double rel = std::fabs(v1 - v2) / (0.5 * (v1 + v2));
    add("c1_two_route_agreement",
        std::fabs(v1 - v2) <= 3.0 * se12 && rel <= 0.10,
        "lifetime=" + fmt(v1) + " occupation=" + fmt(v2) + " diff=" + fmt(v1 - v2) +
            " 3se=" + fmt(3.0 * se12) + " rel=" + fmt(rel));

    const double va = rep.c1_occupation_a.c1.value;
    const double vb = rep.c1_occupation_b.c1.value;
    const double seab = std::sqrt(rep.c1_occupation_a.c1.std_error *
                                      rep.c1_occupation_a.c1.std_error +
                                  rep.c1_occupation_b.c1.std_error *
                                      rep.c1_occupation_b.c1.std_error);
    add("c1_rectangle_independence", std::fabs(va - vb) <= 3.0 * seab,
        "rect_a=" + fmt(va) + " rect_b=" + fmt(vb) + " diff=" + fmt(va - vb) +
            " 3se=" + fmt(3.0 * seab));
    add("occupation_censoring",
        rep.c1_occupation_a.valid && rep.c1_occupation_b.valid,
        "censored_a=" + std::to_string(rep.c1_occupation_a.censored) +
            " censored_b=" + std::to_string(rep.c1_occupation_b.censored));
    add("histogram_ratio_flat", rep.histogram.pass,
        "chi2=" + fmt(rep.histogram.chi_square) +
            " crit=" + fmt(rep.histogram.chi_square_crit_1pct));
    add("histogram_negative_control", rep.histogram.wrong_fails,
        "chi2_wrong=" + fmt(rep.histogram.chi_square_wrong) +
            " crit=" + fmt(rep.histogram.chi_square_crit_1pct));

    rep.pass = true;
    for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
    return rep;
}

VerificationReport verify_theorem(const VerifyConfig& config) {
    return verify_theorem_checkpointed(config, "", {});
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

ordered_json json_of(const Rect& r) {
    return ordered_json{{"x1", r.x1}, {"x2", r.x2}, {"y1", r.y1}, {"y2", r.y2}};
}

ordered_json json_of(const C1Occupation& o) {
    return ordered_json{{"c1", json_of(o.c1)},
                        {"mean_occupation", o.mean_occupation},
                        {"se_occupation", o.se_occupation},
                        {"green_integral", o.green_int},
                        {"censored", o.censored},
                        {"censor_bias_bound", o.censor_bias_bound},
                        {"valid", o.valid}};
}

}  // namespace

std::string verification_json(const VerificationReport& rep) {
    ordered_json j;
    // Scientific configuration only: execution-side fields (worker count,
    // file paths) do not influence the numbers and stay out of the report
    // so that reruns at any parallelism are byte-identical.
    j["version"] = "0.1.0";
    j["config"] = scientific_config_json(rep.config);

    j["law_equivalence"] = ordered_json{{"ks", rep.law.ks},
                                        {"ks_half", rep.law.ks_half},
                                        {"critical_1pct", rep.law.critical_1pct},
                                        {"n", rep.law.n},
                                        {"pass", rep.law.pass}};
    ordered_json mart = ordered_json::array();
    for (const auto& mp : rep.martingale) {
        mart.push_back(ordered_json{{"t", mp.t},
                                    {"m0", mp.m0},
                                    {"stopped_mean", json_of(mp.stopped_mean)},
                                    {"z", mp.z}});
    }
    j["martingale"] = mart;
    j["girsanov"] = ordered_json{{"weighted_bm", json_of(rep.girsanov.weighted_bm)},
                                 {"direct_rho", json_of(rep.girsanov.direct_rho)},
                                 {"diff", rep.girsanov.diff},
                                 {"combined_se", rep.girsanov.combined_se},
                                 {"z", rep.girsanov.z}};
    ordered_json nodes = ordered_json::array();
    for (const auto& nd : rep.c1_lifetime.nodes) {
        nodes.push_back(ordered_json{{"s", nd.s},
                                     {"mean_inv_T", nd.mean_inv_T},
                                     {"se_inv_T", nd.se_inv_T},
                                     {"n", nd.n}});
    }
    j["c1_lifetime"] = ordered_json{{"report", json_of(rep.c1_lifetime.report)},
                                    {"nodes", nodes},
                                    {"nodes_over_tol", rep.c1_lifetime.nodes_over_tol}};
    j["c1_occupation_a"] = json_of(rep.c1_occupation_a);
    j["c1_occupation_b"] = json_of(rep.c1_occupation_b);

    ordered_json cells = ordered_json::array();
    for (const auto& cell : rep.histogram.cells) {
        cells.push_back(ordered_json{{"cell", json_of(cell.cell)},
                                     {"mean", cell.mean},
                                     {"se", cell.se},
                                     {"green_integral", cell.green_int},
                                     {"z", cell.z}});
    }
    j["histogram"] = ordered_json{{"window", json_of(rep.histogram.window)},
                                  {"m", rep.histogram.m},
                                  {"cells", cells},
                                  {"pooled_ratio", rep.histogram.pooled_ratio},
                                  {"chi_square", rep.histogram.chi_square},
                                  {"dof", rep.histogram.dof},
                                  {"chi_square_crit_1pct", rep.histogram.chi_square_crit_1pct},
                                  {"chi_square_wrong", rep.histogram.chi_square_wrong},
                                  {"pass", rep.histogram.pass},
                                  {"wrong_fails", rep.histogram.wrong_fails},
                                  {"censored", rep.histogram.censored}};
    ordered_json checks = ordered_json::array();
    for (const auto& c2 : rep.checks) {
        checks.push_back(ordered_json{{"name", c2.name}, {"pass", c2.pass},
                                      {"detail", c2.detail}});
    }
    j["checks"] = checks;
    j["pass"] = rep.pass;
    return j.dump(2);
}

}  // namespace bsle
