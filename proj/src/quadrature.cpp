#include "bsle/quadrature.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

namespace bsle {

namespace {

constexpr double kGl3X[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGl3W[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

constexpr double kGl5X[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                             0.5384693101056831, 0.9061798459386640};
constexpr double kGl5W[5] = {0.2369268850561891, 0.4786286704993665,
                             0.5688888888888889, 0.4786286704993665,
                             0.2369268850561891};

struct Panel {
    double x1, x2, y1, y2;
    double estimate;  // GL5 x GL5
    double error;     // |GL5 - GL3|
};

template <int N>
double tensor_gl(const std::function<double(double, double)>& f, const double* xs,
                 const double* ws, double x1, double x2, double y1, double y2) {
    const double cx = 0.5 * (x1 + x2), hx = 0.5 * (x2 - x1);
    const double cy = 0.5 * (y1 + y2), hy = 0.5 * (y2 - y1);
    double acc = 0.0;
    for (int i = 0; i < N; ++i) {
        const double x = cx + hx * xs[i];
        double row = 0.0;
        for (int j = 0; j < N; ++j) {
            row += ws[j] * f(x, cy + hy * xs[j]);
        }
        acc += ws[i] * row;
    }
    return acc * hx * hy;
}

Panel make_panel(const std::function<double(double, double)>& f, double x1,
                 double x2, double y1, double y2) {
    Panel p{x1, x2, y1, y2, 0.0, 0.0};
    p.estimate = tensor_gl<5>(f, kGl5X, kGl5W, x1, x2, y1, y2);
    const double coarse = tensor_gl<3>(f, kGl3X, kGl3W, x1, x2, y1, y2);
    p.error = std::fabs(p.estimate - coarse);
    return p;
}

}  // namespace

double integrate_rect(const std::function<double(double, double)>& f, double x1,
                      double x2, double y1, double y2, double rel_tol) {
    if (!(x2 > x1 && y2 > y1)) throw std::invalid_argument("degenerate rectangle");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");

    auto worse = [](const Panel& a, const Panel& b) { return a.error < b.error; };
    std::priority_queue<Panel, std::vector<Panel>, decltype(worse)> queue(worse);
    queue.push(make_panel(f, x1, x2, y1, y2));
    double total = queue.top().estimate;
    double total_err = queue.top().error;

    constexpr std::size_t kMaxPanels = 200000;
    std::size_t panels = 1;
    while (total_err > rel_tol * std::fabs(total) + 1e-300) {
        if (panels + 4 > kMaxPanels) {
            throw std::runtime_error("integrate_rect: panel budget exhausted");
        }
        const Panel p = queue.top();
        queue.pop();
        total -= p.estimate;
        total_err -= p.error;
        const double mx = 0.5 * (p.x1 + p.x2);
        const double my = 0.5 * (p.y1 + p.y2);
        const Panel quads[4] = {
            make_panel(f, p.x1, mx, p.y1, my), make_panel(f, mx, p.x2, p.y1, my),
            make_panel(f, p.x1, mx, my, p.y2), make_panel(f, mx, p.x2, my, p.y2)};
        for (const Panel& q : quads) {
            total += q.estimate;
            total_err += q.error;
            queue.push(q);
        }
        panels += 3;
    }
    return total;
}

double green_integral(const GreenParams& p, const Rect& rect, double rel_tol) {
    rect.validate();
    return integrate_rect([&](double x, double y) { return green(p, x, y); },
                          rect.x1, rect.x2, rect.y1, rect.y2, rel_tol);
}

}  // namespace bsle
