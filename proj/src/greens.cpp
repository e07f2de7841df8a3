#include "bsle/greens.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bsle/parallel.hpp"
#include "bsle/sde.hpp"
#include "bsle/stats.hpp"

namespace bsle {

namespace {

double pw(double base, double e) {
    if (e == 1.0) return base;
    if (e == 2.0) return base * base;
    if (e == -2.0) return 1.0 / (base * base);
    return std::pow(base, e);
}

double mean_of(const std::vector<double>& v) { return sample_mean(v); }
double se_of(const std::vector<double>& v, double mean) { return sample_se(v, mean); }

}  // namespace

GreenParams::GreenParams(double kappa_, double rho_plus_, double rho_minus_)
    : kappa(kappa_), rho_plus(rho_plus_), rho_minus(rho_minus_) {
    if (!(kappa > 0.0 && kappa <= 4.0)) {
        throw std::invalid_argument("GreenParams: kappa must lie in (0, 4]");
    }
    alpha_plus = rho_plus / -kappa;
    alpha_minus = rho_minus / -kappa;
    gamma = rho_plus * rho_minus / (-2.0 * kappa);
    q_plus = rho_plus * (rho_plus + 4.0 + kappa) / (-4.0 * kappa);
    q_minus = rho_minus * (rho_minus + 4.0 + kappa) / (-4.0 * kappa);
}

double green(const GreenParams& p, double x, double y) {
    if (!(x > 0.0 && y < 0.0)) throw std::invalid_argument("green: need x > 0 > y");
    return pw(x, p.alpha_plus) * pw(-y, p.alpha_minus) * pw(x - y, p.gamma);
}

double martingale_M(const GreenParams& p, double X, double Y, double dfx, double dfy) {
    if (!(dfx > 0.0 && dfy > 0.0)) {
        throw std::invalid_argument("martingale_M: derivatives must be positive");
    }
    return green(p, X, Y) * pw(dfx, p.q_plus) * pw(dfy, p.q_minus);
}

// ---------------------------------------------------------------------------
// Lifetime-based estimators (reduced-diffusion route)
// ---------------------------------------------------------------------------

EstimateReport estimate_Gt(double kappa, double x, double y, double t,
                           std::uint64_t n, RngSpec rng, const LifetimeMcOptions& opt) {
    if (!(x > 0.0 && y < 0.0)) throw std::invalid_argument("need x > 0 > y");
    if (n < 1) throw std::invalid_argument("need n >= 1");
    if (t < 0.0) throw std::invalid_argument("need t >= 0");
    const GreenParams p = GreenParams::minus44(kappa);
    const double g = green(p, x, y);
    const double gap = x - y;
    const double s = x / gap;
    const double w0 = 2.0 * s - 1.0;

    std::vector<double> hit(n);
    parallel_for(n, opt.workers, [&](std::size_t i) {
        const LifetimeEstimate est =
            sample_lifetime(kappa, w0, s, s - 1.0, opt.bessel_step, opt.tail_tol,
                            RngSpec{rng.seed, rng.stream + i});
        const double T = (est.value + 0.5 * est.tail_bound) * gap * gap;
        hit[i] = T <= t ? 1.0 : 0.0;
    });
    const double phat = mean_of(hit);

    EstimateReport rep;
    rep.value = g * phat;
    rep.std_error =
        g * std::sqrt(phat * (1.0 - phat) / static_cast<double>(n));
    rep.n = n;
    rep.seed = rng.seed;
    rep.stream_base = rng.stream;
    rep.step = opt.bessel_step;
    rep.horizon = bessel_horizon(kappa, gap, opt.tail_tol);
    rep.tail_tol = opt.tail_tol;
    return rep;
}

EstimateReport mean_inverse_lifetime(double kappa, double s, std::uint64_t n,
                                     RngSpec rng, double horizon, double tail_tol,
                                     double bessel_step, unsigned workers) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("need s in (0, 1)");
    if (n < 1) throw std::invalid_argument("need n >= 1");
    if (horizon < bessel_horizon(kappa, 1.0, tail_tol)) {
        throw std::runtime_error("mean_inverse_lifetime: horizon too short for tail_tol");
    }
    const double w0 = 2.0 * s - 1.0;
    std::vector<double> mid(n), half(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const LifetimeEstimate est = sample_lifetime_with_horizon(
            kappa, w0, s, s - 1.0, bessel_step, horizon, RngSpec{rng.seed, rng.stream + i});
        const double hi = 1.0 / est.value;
        const double lo = 1.0 / (est.value + est.tail_bound);
        mid[i] = 0.5 * (hi + lo);
        half[i] = 0.5 * (hi - lo);
    });
    EstimateReport rep;
    rep.value = mean_of(mid);
    rep.std_error = se_of(mid, rep.value) + mean_of(half);
    rep.n = n;
    rep.seed = rng.seed;
    rep.stream_base = rng.stream;
    rep.step = bessel_step;
    rep.horizon = horizon;
    rep.tail_tol = tail_tol;
    return rep;
}

ScalingCheck scaling_check(double kappa, double s, double r, std::uint64_t n,
                           RngSpec rng, const LifetimeMcOptions& opt) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("need s in (0, 1)");
    if (!(r > 0.0)) throw std::invalid_argument("need r > 0");
    if (n < 1) throw std::invalid_argument("need n >= 1");
    const double w0 = 2.0 * s - 1.0;

    auto estimate_prob = [&](double gap, double threshold,
                             std::uint64_t stream_base) {
        std::vector<double> hit(n);
        parallel_for(n, opt.workers, [&](std::size_t i) {
            const LifetimeEstimate est = sample_lifetime(
                kappa, w0, gap * s, gap * (s - 1.0), opt.bessel_step, opt.tail_tol,
                RngSpec{rng.seed, stream_base + i});
            const double T = est.value + 0.5 * est.tail_bound;
            hit[i] = T <= threshold ? 1.0 : 0.0;
        });
        const double phat = mean_of(hit);
        EstimateReport rep;
        rep.value = phat;
        rep.std_error = std::sqrt(phat * (1.0 - phat) / static_cast<double>(n));
        rep.n = n;
        rep.seed = rng.seed;
        rep.stream_base = stream_base;
        rep.step = opt.bessel_step;
        rep.horizon = bessel_horizon(kappa, gap, opt.tail_tol);
        rep.tail_tol = opt.tail_tol;
        return rep;
    };

    ScalingCheck out;
    out.left = estimate_prob(r, 1.0, rng.stream);
    out.right = estimate_prob(1.0, 1.0 / (r * r), rng.stream + n);
    out.diff = out.left.value - out.right.value;
    out.combined_se = std::sqrt(out.left.std_error * out.left.std_error +
                                out.right.std_error * out.right.std_error);
    return out;
}

// ---------------------------------------------------------------------------
// Flow-based checks
// ---------------------------------------------------------------------------

namespace {

struct FlowState {
    double lambda = 0.0;
    double fx, fy;
    double dfx = 1.0, dfy = 1.0;
    bool frozen = false;
    double frozen_M = 0.0;

    FlowState(double x, double y) : fx(x), fy(y) {}

    // One grid step: flow with the current driving value, then move lambda.
    // Returns false once frozen (floor reached or a point about to swallow).
    // lambda advances either way, so it stays the exact Brownian path.
    bool advance(double h, double floor, double dlam) {
        const double wx = fx - lambda;
        const double wy = fy - lambda;
        if (wx * wx <= 4.0 * h || wy * wy <= 4.0 * h) {
            lambda += dlam;
            return false;
        }
        const double wxn = std::sqrt(wx * wx - 4.0 * h);
        const double wyn = std::sqrt(wy * wy - 4.0 * h);
        dfx *= wx / wxn;
        dfy *= -wy / wyn;
        fx = lambda + wxn;
        fy = lambda - wyn;
        lambda += dlam;
        const double X = fx - lambda;
        const double Y = fy - lambda;
        if (X < floor || -Y < floor) return false;
        return true;
    }
};

std::uint64_t grid_index_of(double t, double step) {
    const double ratio = t / step;
    const double rounded = std::round(ratio);
    if (std::fabs(ratio - rounded) > 1e-9 * (ratio + 1.0)) {
        throw std::invalid_argument("time must be grid-aligned with step");
    }
    return static_cast<std::uint64_t>(rounded);
}

}  // namespace

std::vector<MartingaleCheckPoint> martingale_check(double kappa, double x, double y,
                                                   std::span<const double> t_values,
                                                   double cap, std::uint64_t n,
                                                   double step, RngSpec rng,
                                                   unsigned workers) {
    if (!(x > 0.0 && y < 0.0)) throw std::invalid_argument("need x > 0 > y");
    if (t_values.empty()) throw std::invalid_argument("need at least one time");
    if (!(cap > 0.0)) throw std::invalid_argument("cap must be positive");
    const GreenParams p = GreenParams::minus44(kappa);
    const double m0 = green(p, x, y);
    const double floor = 0.05 * std::min(x, -y);
    const double sigma = std::sqrt(kappa * step);

    std::vector<std::uint64_t> t_idx;
    for (double t : t_values) t_idx.push_back(grid_index_of(t, step));
    if (t_idx.front() == 0) throw std::invalid_argument("t_values must be positive");
    for (std::size_t j = 1; j < t_idx.size(); ++j) {
        if (t_idx[j] <= t_idx[j - 1]) {
            throw std::invalid_argument("t_values must be strictly increasing");
        }
    }
    const std::uint64_t last = t_idx.back();

    std::vector<std::vector<double>> samples(t_idx.size());
    for (auto& v : samples) v.resize(n);

    parallel_for(n, workers, [&](std::size_t i) {
        Philox gen(RngSpec{rng.seed, rng.stream + i});
        FlowState st(x, y);
        double M = m0;
        bool capped = false;
        std::size_t jt = 0;
        for (std::uint64_t k = 1; k <= last; ++k) {
            if (!capped && !st.frozen) {
                if (!st.advance(step, floor, sigma * gen.next_normal())) {
                    st.frozen = true;
                    st.frozen_M = M;  // value at the last regular grid point
                } else {
                    M = martingale_M(p, st.fx - st.lambda, st.fy - st.lambda,
                                     st.dfx, st.dfy);
                    if (M >= cap) {
                        capped = true;
                        st.frozen_M = M;
                    }
                }
            }
            if (jt < t_idx.size() && k == t_idx[jt]) {
                samples[jt][i] = (capped || st.frozen) ? st.frozen_M : M;
                ++jt;
            }
        }
    });

    std::vector<MartingaleCheckPoint> out(t_idx.size());
    for (std::size_t j = 0; j < t_idx.size(); ++j) {
        MartingaleCheckPoint cp;
        cp.t = t_values[j];
        cp.m0 = m0;
        cp.stopped_mean.value = mean_of(samples[j]);
        cp.stopped_mean.std_error = se_of(samples[j], cp.stopped_mean.value);
        cp.stopped_mean.n = n;
        cp.stopped_mean.seed = rng.seed;
        cp.stopped_mean.stream_base = rng.stream;
        cp.stopped_mean.step = step;
        cp.z = cp.stopped_mean.std_error > 0.0
                   ? (cp.stopped_mean.value - m0) / cp.stopped_mean.std_error
                   : 0.0;
        out[j] = cp;
    }
    return out;
}

GirsanovCheck girsanov_transfer_check(double kappa, double x, double y, double t,
                                      std::uint64_t n, double step, RngSpec rng,
                                      unsigned workers) {
    if (!(x > 0.0 && y < 0.0)) throw std::invalid_argument("need x > 0 > y");
    const GreenParams p = GreenParams::minus44(kappa);
    const double m0 = green(p, x, y);
    const double floor = 0.02 * std::min(x, -y);
    const double sigma = std::sqrt(kappa * step);
    const std::uint64_t last = grid_index_of(t, step);
    if (last == 0) throw std::invalid_argument("t must be at least one grid step");

    auto clip = [](double v) { return std::clamp(v, -1.0, 1.0); };

    // Plain driver, reweighted by M_t / M_0. Floor-frozen paths keep their
    // frozen weight; the event has vanishing mass at these horizons.
    std::vector<double> left(n);
    parallel_for(n, workers, [&](std::size_t i) {
        Philox gen(RngSpec{rng.seed, rng.stream + i});
        FlowState st(x, y);
        double M = m0;
        for (std::uint64_t k = 1; k <= last; ++k) {
            if (!st.frozen) {
                if (!st.advance(step, floor, sigma * gen.next_normal())) {
                    st.frozen = true;
                    st.frozen_M = M;
                } else {
                    M = martingale_M(p, st.fx - st.lambda, st.fy - st.lambda,
                                     st.dfx, st.dfy);
                }
            } else {
                // Keep consuming the stream so the driving value stays the
                // plain Brownian path.
                st.lambda += sigma * gen.next_normal();
            }
        }
        const double weight = st.frozen ? st.frozen_M : M;
        left[i] = (weight / m0) * clip(st.lambda);
    });

    std::vector<double> right(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const RhoAtTime at = rho_driver_at_time(kappa, -4.0, -4.0, x, y, t, step,
                                                RngSpec{rng.seed, rng.stream + n + i});
        right[i] = at.alive ? clip(at.lambda) : 0.0;
    });

    GirsanovCheck out;
    out.weighted_bm.value = mean_of(left);
    out.weighted_bm.std_error = se_of(left, out.weighted_bm.value);
    out.weighted_bm.n = n;
    out.weighted_bm.seed = rng.seed;
    out.weighted_bm.stream_base = rng.stream;
    out.weighted_bm.step = step;
    out.direct_rho.value = mean_of(right);
    out.direct_rho.std_error = se_of(right, out.direct_rho.value);
    out.direct_rho.n = n;
    out.direct_rho.seed = rng.seed;
    out.direct_rho.stream_base = rng.stream + n;
    out.direct_rho.step = step;
    out.diff = out.weighted_bm.value - out.direct_rho.value;
    out.combined_se = std::sqrt(out.weighted_bm.std_error * out.weighted_bm.std_error +
                                out.direct_rho.std_error * out.direct_rho.std_error);
    out.z = out.combined_se > 0.0 ? out.diff / out.combined_se : 0.0;
    return out;
}

}  // namespace bsle
