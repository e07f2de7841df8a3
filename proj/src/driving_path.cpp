#include "bsle/driving_path.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "bsle/format.hpp"

namespace bsle {

void DrivingPath::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw std::invalid_argument("DrivingPath: step must be positive and finite");
    }
    if (values.empty()) {
        throw std::invalid_argument("DrivingPath: values must be nonempty");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("DrivingPath: non-finite driving value");
        }
    }
    if (lifetime_index && *lifetime_index >= values.size()) {
        throw std::invalid_argument("DrivingPath: lifetime_index out of range");
    }
}

DrivingPath DrivingPath::zero(double step, double t_max) {
    DrivingPath p;
    p.step = step;
    const auto n = static_cast<std::size_t>(std::ceil(t_max / step)) + 1;
    p.values.assign(n, 0.0);
    p.validate();
    return p;
}

void save_csv(const DrivingPath& path, std::ostream& out) {
    out << "step=" << format_double(path.step) << "\n";
    for (double v : path.values) out << format_double(v) << "\n";
    if (path.lifetime_index) out << "lifetime_index=" << *path.lifetime_index << "\n";
}

DrivingPath load_driving_csv(std::istream& in) {
    DrivingPath path;
    std::string line;
    if (!std::getline(in, line) || line.rfind("step=", 0) != 0) {
        throw std::invalid_argument("driving CSV: missing step= header");
    }
    path.step = parse_double(line.substr(5));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("lifetime_index=", 0) == 0) {
            path.lifetime_index = static_cast<std::size_t>(std::stoull(line.substr(15)));
            break;
        }
        path.values.push_back(parse_double(line));
    }
    path.validate();
    return path;
}

}  // namespace bsle
