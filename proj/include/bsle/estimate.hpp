#pragma once

#include <cstdint>
#include <string>

namespace bsle {

// A Monte Carlo result together with everything needed to reproduce it.
struct EstimateReport {
    double value = 0.0;
    // Statistical standard error; deterministic interval half-widths
    // (certified quadrature tails) are folded in additively so truncation
    // can widen but never bias the reported interval.
    double std_error = 0.0;
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream_base = 0;
    double step = 0.0;
    double horizon = 0.0;
    double tail_tol = 0.0;
};

// Flat JSON object with keys value, std_error, n, seed, stream_base,
// step, horizon, tail_tol (stable key order).
std::string report_json(const EstimateReport& report);

}  // namespace bsle
