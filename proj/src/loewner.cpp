#include "bsle/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bsle {

namespace {

struct StepPlan {
    std::size_t full_steps;
    double remainder;
};

StepPlan plan_steps(const DrivingPath& path, double t_end) {
    path.validate();
    if (t_end < 0.0) throw std::invalid_argument("t_end must be nonnegative");
    if (t_end > path.duration() * (1.0 + 1e-12) + 1e-300) {
        throw std::invalid_argument("t_end exceeds path duration");
    }
    const double ratio = t_end / path.step;
    auto full = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    if (full > path.values.size() - 1) full = path.values.size() - 1;
    double rem = t_end - static_cast<double>(full) * path.step;
    if (rem < path.step * 1e-9) rem = 0.0;
    return {full, rem};
}

}  // namespace

FlowPoint evolve_point(double z, const DrivingPath& path, double t_end) {
    const StepPlan plan = plan_steps(path, t_end);
    if (z == path.values[0] && t_end > 0.0) {
        throw std::invalid_argument("evolve_point: real start on the driving value");
    }
    FlowPoint p;
    p.origin = z;
    p.image = z;
    double f = z;
    for (std::size_t k = 0; k <= plan.full_steps; ++k) {
        double h;
        if (k < plan.full_steps) {
            h = path.step;
        } else if (plan.remainder > 0.0 && k < path.values.size()) {
            h = plan.remainder;
        } else {
            break;
        }
        const double lambda = path.values[k];
        const double w = f - lambda;
        const double w2 = w * w;
        if (w2 <= 4.0 * h) {
            p.status = PointStatus::swallowed;
            p.tau = static_cast<double>(k) * path.step + w2 / 4.0;
            p.image = lambda;
            return p;
        }
        const double wn = std::sqrt(w2 - 4.0 * h);
        p.derivative *= std::fabs(w) / wn;
        f = lambda + (w > 0.0 ? wn : -wn);
    }
    p.image = f;
    return p;
}

FlowPoint evolve_point(std::complex<double> z, const DrivingPath& path, double t_end) {
    if (z.imag() == 0.0) return evolve_point(z.real(), path, t_end);
    if (z.imag() < 0.0) {
        throw std::invalid_argument("evolve_point: lower half-plane input");
    }
    const StepPlan plan = plan_steps(path, t_end);
    FlowPoint p;
    p.origin = z;
    std::complex<double> f = z;
    for (std::size_t k = 0; k <= plan.full_steps; ++k) {
        double h;
        if (k < plan.full_steps) {
            h = path.step;
        } else if (plan.remainder > 0.0 && k < path.values.size()) {
            h = plan.remainder;
        } else {
            break;
        }
        const double lambda = path.values[k];
        f = lambda + step_map(f - lambda, h);
    }
    p.image = f;
    return p;
}

SwallowResult swallowing_time(double z, const DrivingPath& path) {
    path.validate();
    if (z == path.values[0]) {
        throw std::invalid_argument("swallowing_time: start on the driving value");
    }
    TauSweep sweep({z}, path.step);
    for (std::size_t k = 0; k + 1 < path.values.size(); ++k) {
        if (!sweep.advance(path.values[k])) break;
    }
    return sweep.results()[0];
}

TauSweep::TauSweep(std::vector<double> points, double step) : step_(step) {
    if (!(step > 0.0)) throw std::invalid_argument("TauSweep: step must be positive");
    out_.resize(points.size());
    image_ = std::move(points);
    index_.resize(image_.size());
    for (std::size_t i = 0; i < index_.size(); ++i) index_[i] = i;
}

bool TauSweep::advance(double lambda) {
    const double h4 = 4.0 * step_;
    std::size_t j = 0;
    while (j < image_.size()) {
        const double w = image_[j] - lambda;
        const double w2 = w * w;
        if (w2 <= h4) {
            out_[index_[j]] = {true, t_ + w2 / 4.0};
            image_[j] = image_.back();
            index_[j] = index_.back();
            image_.pop_back();
            index_.pop_back();
        } else {
            const double wn = std::sqrt(w2 - h4);
            image_[j] = lambda + (w > 0.0 ? wn : -wn);
            ++j;
        }
    }
    t_ += step_;
    return !image_.empty();
}

void Rect::validate() const {
    if (!(0.0 < x1 && x1 < x2 && y1 < y2 && y2 < 0.0)) {
        throw std::invalid_argument("Rect: need 0 < x1 < x2 and y1 < y2 < 0");
    }
}

WeldingRecord welding_curve(const DrivingPath& path, const MeshSpec& mesh) {
    path.validate();
    if (!(mesh.inner > 0.0 && mesh.outer > mesh.inner && mesh.per_side >= 2)) {
        throw std::invalid_argument("MeshSpec: need 0 < inner < outer, per_side >= 2");
    }
    WeldingRecord rec;
    rec.origin = path.values[0];
    const double ratio = std::pow(mesh.outer / mesh.inner,
                                  1.0 / static_cast<double>(mesh.per_side - 1));
    rec.mesh_pos.reserve(mesh.per_side);
    rec.mesh_neg.reserve(mesh.per_side);
    double off = mesh.inner;
    for (std::size_t i = 0; i < mesh.per_side; ++i) {
        rec.mesh_pos.push_back(rec.origin + off);
        rec.mesh_neg.push_back(rec.origin - off);
        off *= ratio;
    }

    std::vector<double> pts = rec.mesh_pos;
    pts.insert(pts.end(), rec.mesh_neg.begin(), rec.mesh_neg.end());
    TauSweep sweep(std::move(pts), path.step);
    for (std::size_t k = 0; k + 1 < path.values.size(); ++k) {
        if (!sweep.advance(path.values[k])) break;
    }
    const auto& res = sweep.results();
    rec.tau_pos.assign(res.begin(), res.begin() + static_cast<std::ptrdiff_t>(mesh.per_side));
    rec.tau_neg.assign(res.begin() + static_cast<std::ptrdiff_t>(mesh.per_side), res.end());
    return rec;
}

namespace {

// Inverse of the monotone map mesh -> tau at time t, with (origin, 0)
// prepended as the first node. Requires tau coverage up to t.
double invert_tau(double origin, const std::vector<double>& mesh,
                  const std::vector<SwallowResult>& tau, double t) {
    if (t < 0.0) throw std::invalid_argument("welding query: negative time");
    double v0 = origin, t0 = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (!tau[i].swallowed) break;
        const double t1 = tau[i].tau;
        if (t <= t1) {
            if (t1 == t0) return mesh[i];
            const double a = (t - t0) / (t1 - t0);
            return v0 + a * (mesh[i] - v0);
        }
        v0 = mesh[i];
        t0 = t1;
    }
    throw std::out_of_range("welding query: time beyond resolved mesh range");
}

}  // namespace

double WeldingRecord::d_at(double t) const { return invert_tau(origin, mesh_pos, tau_pos, t); }
double WeldingRecord::c_at(double t) const { return invert_tau(origin, mesh_neg, tau_neg, t); }

double WeldingRecord::covered_time() const {
    double tp = 0.0, tn = 0.0;
    for (std::size_t i = 0; i < tau_pos.size() && tau_pos[i].swallowed; ++i) tp = tau_pos[i].tau;
    for (std::size_t i = 0; i < tau_neg.size() && tau_neg[i].swallowed; ++i) tn = tau_neg[i].tau;
    return tp < tn ? tp : tn;
}

double WeldingRecord::phi(double v) const {
    const auto tau_of = [&](const std::vector<double>& mesh,
                            const std::vector<SwallowResult>& tau) {
        double v0 = origin, t0 = 0.0;
        const bool increasing = mesh.back() > origin;
        for (std::size_t i = 0; i < mesh.size(); ++i) {
            if (!tau[i].swallowed) break;
            const bool inside = increasing ? (v <= mesh[i]) : (v >= mesh[i]);
            if (inside) {
                const double span = mesh[i] - v0;
                const double a = span == 0.0 ? 0.0 : (v - v0) / span;
                return t0 + a * (tau[i].tau - t0);
            }
            v0 = mesh[i];
            t0 = tau[i].tau;
        }
        throw std::out_of_range("phi: value beyond resolved mesh range");
    };
    if (v == origin) return origin;
    if (v > origin) return c_at(tau_of(mesh_pos, tau_pos));
    return d_at(tau_of(mesh_neg, tau_neg));
}

OccupationResult rect_occupation(const DrivingPath& path, const Rect& rect) {
    path.validate();
    rect.validate();
    if (path.values[0] != 0.0) {
        throw std::invalid_argument("rect_occupation: path must start at 0");
    }
    TauSweep sweep({rect.x1, rect.x2, rect.y1, rect.y2}, path.step);
    for (std::size_t k = 0; k + 1 < path.values.size(); ++k) {
        if (!sweep.advance(path.values[k])) break;
    }
    const auto& r = sweep.results();
    for (const auto& s : r) {
        if (!s.swallowed) return {false, 0.0};
    }
    return {true, occupation_from_corners(r[0].tau, r[1].tau, r[2].tau, r[3].tau)};
}

double hcap_probe(const DrivingPath& path, double t, double R) {
    if (!(R > 0.0)) throw std::invalid_argument("hcap_probe: R must be positive");
    if (t == 0.0) return 0.0;
    const FlowPoint p = evolve_point(std::complex<double>(0.0, R), path, t);
    const std::complex<double> ref =
        std::complex<double>(0.0, R) - 2.0 * t / std::complex<double>(0.0, R);
    return std::abs(p.image - ref);
}

}  // namespace bsle
