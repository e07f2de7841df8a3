#include "bsle/sde.hpp"

#include <cmath>
#include <stdexcept>

namespace bsle {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void check_kappa(double kappa) {
    if (!(kappa > 0.0 && kappa <= 4.0)) {
        throw std::invalid_argument("kappa must lie in (0, 4]");
    }
}

}  // namespace

DrivingPath sample_brownian_driver(double kappa, double step, double t_max, RngSpec rng) {
    check_kappa(kappa);
    if (!(step > 0.0) || !(t_max > 0.0)) {
        throw std::invalid_argument("step and t_max must be positive");
    }
    const auto n = static_cast<std::size_t>(std::ceil(t_max / step)) + 1;
    DrivingPath path;
    path.step = step;
    path.values.resize(n);
    path.values[0] = 0.0;
    Philox gen(rng);
    const double sigma = std::sqrt(kappa * step);
    for (std::size_t k = 1; k < n; ++k) {
        path.values[k] = path.values[k - 1] + sigma * gen.next_normal();
    }
    return path;
}

// ---------------------------------------------------------------------------
// rho-driver kernel
// ---------------------------------------------------------------------------

namespace {

struct RhoStop {
    bool stopped = false;      // hit the eps floor (lifetime reached)
    bool limited = false;      // reached t_limit while alive
    double t_stop = 0.0;
    double X = 0.0, Y = 0.0;
    double lambda = 0.0;
};

// Integrates the driver SDE until the lifetime floor or t_limit. sink(k,
// lambda, X, Y) fires at every completed grid index k >= 1. The driving
// value is frozen at the substep's left endpoint for the flow map, so the
// decrement of (X - Y)^2 obeys the exact rate bound of the continuous flow.
template <class Sink>
RhoStop run_rho_kernel(double kappa, double rho_plus, double rho_minus, double x,
                       double y, double step, double t_limit, RngSpec rng,
                       const RhoDriverOptions& opt, Sink&& sink) {
    check_kappa(kappa);
    if (!(x > 0.0 && y < 0.0)) throw std::invalid_argument("need x > 0 > y");
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");

    const double eps = opt.eps_stop_rel * (x - y);
    double lambda = 0.0;
    double fx = x, fy = y;
    double t_base = 0.0;  // completed grid time, k * step
    std::uint64_t k = 0;
    std::uint64_t substeps = 0;
    Philox gen(rng);

    for (;;) {
        double consumed = 0.0;
        while (consumed < step) {
            const double X = fx - lambda;
            const double Y = fy - lambda;
            const double gap = X - Y;
            if (X < eps || -Y < eps || gap < eps) {
                return {true, false, t_base + consumed, X, Y, lambda};
            }
            if (++substeps > opt.max_substeps) {
                throw std::runtime_error("rho driver: substep safety cap exceeded");
            }
            double h = step - consumed;
            double cap = X * X;
            if (Y * Y < cap) cap = Y * Y;
            if (gap * gap < cap) cap = gap * gap;
            if (cap > 1.0) cap = 1.0;
            cap *= step / opt.shrink_scale;
            if (cap < h) h = cap;

            const double dlam = std::sqrt(kappa * h) * gen.next_normal() +
                                h * (rho_plus / X + rho_minus / Y);
            fx = lambda + std::sqrt(X * X - 4.0 * h);
            fy = lambda - std::sqrt(Y * Y - 4.0 * h);
            lambda += dlam;
            consumed += h;
            if (fx - lambda <= 0.0 || fy - lambda >= 0.0) {
                // Drift overshoot past a force image; treat as the lifetime.
                return {true, false, t_base + consumed, fx - lambda, fy - lambda, lambda};
            }
        }
        ++k;
        t_base = static_cast<double>(k) * step;
        sink(k, lambda, fx - lambda, fy - lambda);
        if (t_base >= t_limit * (1.0 - 1e-12)) {
            return {false, true, t_base, fx - lambda, fy - lambda, lambda};
        }
    }
}

}  // namespace

RhoDriverResult sample_rho_driver(double kappa, double rho_plus, double rho_minus,
                                  double x, double y, double step, RngSpec rng,
                                  const RhoDriverOptions& opt) {
    RhoDriverResult res;
    res.x = x;
    res.y = y;
    res.kappa = kappa;
    res.rho_plus = rho_plus;
    res.rho_minus = rho_minus;
    if (opt.record) {
        res.driver.step = step;
        res.driver.values.push_back(0.0);
        res.X_trace.push_back(x);
        res.Y_trace.push_back(y);
    }
    const double inf = std::numeric_limits<double>::infinity();
    auto sink = [&](std::uint64_t, double lam, double X, double Y) {
        if (opt.record) {
            res.driver.values.push_back(lam);
            res.X_trace.push_back(X);
            res.Y_trace.push_back(Y);
        }
    };
    const RhoStop stop =
        run_rho_kernel(kappa, rho_plus, rho_minus, x, y, step, inf, rng, opt, sink);
    res.t_stop = stop.t_stop;
    res.X_stop = stop.X;
    res.Y_stop = stop.Y;
    const double gap = stop.X - stop.Y;
    res.remainder_bound = gap * gap / 16.0;
    res.T = stop.t_stop + res.remainder_bound;
    if (opt.record) {
        res.driver.lifetime_index = res.driver.values.size() - 1;
    }
    return res;
}

double rho_lifetime(double kappa, double rho_plus, double rho_minus, double x,
                    double y, double step, RngSpec rng, const RhoDriverOptions& opt) {
    RhoDriverOptions o = opt;
    o.record = false;
    const double inf = std::numeric_limits<double>::infinity();
    const RhoStop stop = run_rho_kernel(kappa, rho_plus, rho_minus, x, y, step, inf,
                                        rng, o, [](std::uint64_t, double, double, double) {});
    const double gap = stop.X - stop.Y;
    return stop.t_stop + gap * gap / 16.0;
}

RhoAtTime rho_driver_at_time(double kappa, double rho_plus, double rho_minus,
                             double x, double y, double t, double step, RngSpec rng,
                             const RhoDriverOptions& opt) {
    if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
    const double ratio = t / step;
    if (std::fabs(ratio - std::round(ratio)) > 1e-9 * ratio + 1e-12) {
        throw std::invalid_argument("t must be grid-aligned");
    }
    RhoDriverOptions o = opt;
    o.record = false;
    const RhoStop stop = run_rho_kernel(kappa, rho_plus, rho_minus, x, y, step, t,
                                        rng, o, [](std::uint64_t, double, double, double) {});
    if (stop.limited) return {true, stop.lambda, 0.0};
    const double gap = stop.X - stop.Y;
    return {false, 0.0, stop.t_stop + gap * gap / 16.0};
}

DrivingPath extend_driver(const RhoDriverResult& result, double step, double t_max,
                          RngSpec rng) {
    result.driver.validate();
    if (!result.driver.lifetime_index) {
        throw std::invalid_argument("extend_driver: driver has no lifetime marker");
    }
    if (step != result.driver.step) {
        throw std::invalid_argument("extend_driver: grid step must match the driver");
    }
    DrivingPath out = result.driver;
    const auto n = static_cast<std::size_t>(std::ceil(t_max / step)) + 1;
    Philox gen(rng);
    const double sigma = std::sqrt(result.kappa * step);
    while (out.values.size() < n) {
        out.values.push_back(out.values.back() + sigma * gen.next_normal());
    }
    return out;
}

// ---------------------------------------------------------------------------
// cos-Bessel kernel
// ---------------------------------------------------------------------------

namespace {

constexpr double kSubstepFloor = 1e-14;

// sink(k, V) fires at grid indices k = 0..n_values-1.
template <class Sink>
void run_bessel_kernel(double kappa, double w0, double step, std::size_t n_values,
                       RngSpec rng, Sink&& sink) {
    check_kappa(kappa);
    if (!(w0 > -1.0 && w0 < 1.0)) {
        throw std::invalid_argument("w0 must lie strictly inside (-1, 1)");
    }
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");

    const double drift_coef = (8.0 / kappa - 1.0) / 2.0;
    double V = std::acos(w0);
    Philox gen(rng);
    sink(std::size_t{0}, V);
    for (std::size_t k = 1; k < n_values; ++k) {
        double remaining = step;
        while (remaining > 0.0) {
            const double dist = V < kPi - V ? V : kPi - V;
            double h = remaining;
            const double cap = dist * dist / 36.0;
            if (cap < h) h = cap;
            if (h < kSubstepFloor) h = kSubstepFloor;
            const double cotV = std::cos(V) / std::sin(V);
            V += drift_coef * cotV * h + std::sqrt(h) * gen.next_normal();
            // ~6-sigma overshoots of the endpoints get reflected.
            if (V <= 0.0) V = -V;
            if (V >= kPi) V = 2.0 * kPi - V;
            if (V <= 0.0 || V >= kPi) V = kPi / 2.0;  // unreachable double overshoot
            remaining -= h;
        }
        sink(k, V);
    }
}

std::size_t grid_values_for(double step, double t_max) {
    return static_cast<std::size_t>(std::ceil(t_max / step)) + 1;
}

}  // namespace

BesselPath sample_cos_bessel(double kappa, double w0, double step, double t_max,
                             RngSpec rng) {
    if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    BesselPath path;
    path.step = step;
    path.w0 = w0;
    path.V_values.resize(grid_values_for(step, t_max));
    run_bessel_kernel(kappa, w0, step, path.V_values.size(), rng,
                      [&](std::size_t k, double V) { path.V_values[k] = V; });
    return path;
}

double bessel_horizon(double kappa, double gap, double tail_tol) {
    if (!(gap > 0.0) || !(tail_tol > 0.0)) {
        throw std::invalid_argument("gap and tail_tol must be positive");
    }
    const double t = (kappa / 4.0) * std::log(gap * gap / (16.0 * tail_tol));
    return t > 0.0 ? t : 0.0;
}

namespace {

LifetimeEstimate lifetime_accumulate(double x, double y, double kappa, double step,
                                     std::size_t n_values, const double* V) {
    const double gap = x - y;
    const double pref = gap * gap / (4.0 * kappa);
    const double rho = std::exp(-4.0 * step / kappa);
    double e = 1.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < n_values; ++k) {
        const double s = std::sin(V[k]);
        const double g = e * s * s;
        acc += (k == 0 || k == n_values - 1) ? 0.5 * g : g;
        e *= rho;
    }
    const double t_grid = step * static_cast<double>(n_values - 1);
    LifetimeEstimate est;
    est.value = pref * step * acc;
    est.tail_bound = (gap * gap / 16.0) * std::exp(-4.0 * t_grid / kappa);
    return est;
}

}  // namespace

LifetimeEstimate lifetime_from_bessel(const BesselPath& path, double x, double y,
                                      double kappa, double tail_tol) {
    if (!(x > 0.0 && y < 0.0)) throw std::invalid_argument("need x > 0 > y");
    if (path.V_values.size() < 2) {
        throw std::invalid_argument("Bessel path too short");
    }
    const double gap = x - y;
    const double t_grid = path.step * static_cast<double>(path.V_values.size() - 1);
    const double tail = (gap * gap / 16.0) * std::exp(-4.0 * t_grid / kappa);
    if (!(tail < tail_tol)) {
        throw std::runtime_error("lifetime_from_bessel: horizon too short for tail_tol");
    }
    return lifetime_accumulate(x, y, kappa, path.step, path.V_values.size(),
                               path.V_values.data());
}

LifetimeEstimate sample_lifetime(double kappa, double w0, double x, double y,
                                 double step, double tail_tol, RngSpec rng) {
    const double horizon = bessel_horizon(kappa, x - y, tail_tol);
    return sample_lifetime_with_horizon(kappa, w0, x, y, step, horizon, rng);
}

LifetimeEstimate sample_lifetime_with_horizon(double kappa, double w0, double x,
                                              double y, double step, double horizon,
                                              RngSpec rng) {
    const std::size_t n = grid_values_for(step, horizon > step ? horizon : step);

    const double gap = x - y;
    const double pref = gap * gap / (4.0 * kappa);
    const double rho = std::exp(-4.0 * step / kappa);
    double e = 1.0;
    double acc = 0.0;
    run_bessel_kernel(kappa, w0, step, n, rng, [&](std::size_t k, double V) {
        const double s = std::sin(V);
        const double g = e * s * s;
        acc += (k == 0 || k == n - 1) ? 0.5 * g : g;
        e *= rho;
    });
    const double t_grid = step * static_cast<double>(n - 1);
    LifetimeEstimate est;
    est.value = pref * step * acc;
    est.tail_bound = (gap * gap / 16.0) * std::exp(-4.0 * t_grid / kappa);
    return est;
}

// ---------------------------------------------------------------------------
// Coordinate helpers
// ---------------------------------------------------------------------------

double time_change_u(double X, double Y, double x, double y, double kappa) {
    if (!(X > 0.0 && Y < 0.0 && x > 0.0 && y < 0.0)) {
        throw std::invalid_argument("need X > 0 > Y and x > 0 > y");
    }
    return -(kappa / 2.0) * std::log((X - Y) / (x - y));
}

double u_rate(double X, double Y, double kappa) {
    if (!(X > 0.0 && Y < 0.0)) throw std::invalid_argument("need X > 0 > Y");
    return -kappa / (X * Y);
}

double w_from_xy(double X, double Y) {
    if (!(X > 0.0 && Y < 0.0)) throw std::invalid_argument("need X > 0 > Y");
    return (X + Y) / (X - Y);
}

}  // namespace bsle
