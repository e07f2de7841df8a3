#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "bsle/driving_path.hpp"

namespace bsle {

// ---------------------------------------------------------------------------
// Exact single-step maps for the backward flow with the driving value held
// constant: an offset w = f - lambda evolves as w' = sqrt(w^2 - 4h).
// ---------------------------------------------------------------------------

struct StepResult {
    bool swallowed = false;
    double offset = 0.0;  // valid when alive
    double dtau = 0.0;    // time into the step at swallowing, = w^2/4
};

// Real offset. w == 0 is a contract violation (the point sits on the
// driving value; tau = 0 there is degenerate and never needed).
inline StepResult step_map(double w, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step_map: h must be positive");
    if (w == 0.0) throw std::invalid_argument("step_map: real offset must be nonzero");
    const double w2 = w * w;
    if (w2 <= 4.0 * h) return {true, 0.0, w2 / 4.0};
    const double r = std::sqrt(w2 - 4.0 * h);
    return {false, w > 0.0 ? r : -r, 0.0};
}

// Upper-half-plane offset: the square-root branch with positive imaginary
// part, which is the one continuous with w' ~ w at infinity.
inline std::complex<double> step_map(std::complex<double> w, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step_map: h must be positive");
    std::complex<double> s = std::sqrt(w * w - 4.0 * h);
    if (s.imag() < 0.0) s = -s;
    return s;
}

// Factor multiplying f_t' over one exact step: |w| / |w_next|.
inline double step_derivative(double w, double w_next) {
    if (w * w_next <= 0.0) {
        throw std::invalid_argument("step_derivative: offsets must share a sign");
    }
    const double aw = std::fabs(w);
    const double an = std::fabs(w_next);
    if (an >= aw) throw std::invalid_argument("step_derivative: |w_next| must shrink");
    return aw / an;
}

// ---------------------------------------------------------------------------
// Point evolution along a sampled driving path.
// ---------------------------------------------------------------------------

enum class PointStatus { alive, swallowed };

struct FlowPoint {
    std::complex<double> origin;
    std::complex<double> image;
    // f_t'(z) for real points; at swallowing this holds the last alive value.
    double derivative = 1.0;
    PointStatus status = PointStatus::alive;
    double tau = 0.0;  // valid when swallowed
};

FlowPoint evolve_point(std::complex<double> z, const DrivingPath& path, double t_end);
FlowPoint evolve_point(double z, const DrivingPath& path, double t_end);

struct SwallowResult {
    bool swallowed = false;
    double tau = 0.0;
};

SwallowResult swallowing_time(double z, const DrivingPath& path);

// Tracks many real points through the flow one grid step at a time.
// Estimators feed driving values directly as they are generated; the
// engine entry points feed a stored DrivingPath. Both paths share the
// same per-step arithmetic.
class TauSweep {
public:
    TauSweep(std::vector<double> points, double step);

    // One grid step with the given left-endpoint driving value.
    // Returns true while some point is still alive.
    bool advance(double lambda);

    std::size_t alive_count() const noexcept { return image_.size(); }
    double time() const noexcept { return t_; }
    const std::vector<SwallowResult>& results() const noexcept { return out_; }

private:
    double step_;
    double t_ = 0.0;
    std::vector<double> image_;
    std::vector<std::size_t> index_;
    std::vector<SwallowResult> out_;
};

// ---------------------------------------------------------------------------
// Welding curves and occupation times.
// ---------------------------------------------------------------------------

// Geometric mesh on both sides of lambda(0): offsets inner * ratio^i,
// i = 0..per_side-1, with ratio chosen from (inner, outer, per_side).
// Finest near zero, where the welding curve moves fastest.
struct MeshSpec {
    double inner = 1e-3;
    double outer = 4.0;
    std::size_t per_side = 256;
};

struct WeldingRecord {
    double origin = 0.0;  // lambda(0)
    std::vector<double> mesh_pos;  // increasing, > origin
    std::vector<double> mesh_neg;  // decreasing, < origin
    std::vector<SwallowResult> tau_pos;
    std::vector<SwallowResult> tau_neg;

    // Welding curve samples Phi(t) = (d_t, c_t), linearly interpolated
    // between mesh swallowing times. Valid for t inside the swallowed range.
    double d_at(double t) const;
    double c_at(double t) const;
    // The welding involution: pairs v on one side of the origin with the
    // point swallowed at the same time on the other side.
    double phi(double v) const;
    // Largest time up to which both sides of the curve are resolved.
    double covered_time() const;
};

WeldingRecord welding_curve(const DrivingPath& path, const MeshSpec& mesh);

// Rectangle strictly inside the fourth quadrant: 0 < x1 < x2, y1 < y2 < 0.
struct Rect {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    void validate() const;
};

struct OccupationResult {
    bool complete = false;  // false when a corner outlived the path horizon
    double time = 0.0;
};

// Exact capacity time the welding curve spends in the rectangle, from the
// four corner swallowing times: the curve is in the rectangle during
// [tau_x1, tau_x2] inter [tau_y2, tau_y1].
OccupationResult rect_occupation(const DrivingPath& path, const Rect& rect);

inline double occupation_from_corners(double tau_x1, double tau_x2,
                                      double tau_y1, double tau_y2) {
    const double lo = tau_x1 > tau_y2 ? tau_x1 : tau_y2;
    const double hi = tau_x2 < tau_y1 ? tau_x2 : tau_y1;
    return hi > lo ? hi - lo : 0.0;
}

// Capacity-normalization diagnostic: |f_t(iR) - (iR - 2t/(iR))|.
double hcap_probe(const DrivingPath& path, double t, double R);

}  // namespace bsle
