#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

namespace bsle {

// A driving function sampled on a uniform capacity-time grid:
// values[k] = lambda(k * step). The flow treats the driver as constant
// at the left grid value on each step. lifetime_index, when present,
// marks the last grid index of the unextended portion of a driver with
// a finite lifetime.
struct DrivingPath {
    double step = 0.0;
    std::vector<double> values;
    std::optional<std::size_t> lifetime_index;

    double duration() const noexcept {
        return values.empty() ? 0.0 : step * static_cast<double>(values.size() - 1);
    }

    // Throws std::invalid_argument when the invariants fail.
    void validate() const;

    static DrivingPath zero(double step, double t_max);
};

// CSV layout: header line `step=<h>`, one driving value per line,
// optional trailer `lifetime_index=<k>`. LF line endings, shortest
// round-trip decimals.
void save_csv(const DrivingPath& path, std::ostream& out);
DrivingPath load_driving_csv(std::istream& in);

}  // namespace bsle
