#include "bsle/estimate.hpp"

#include <json.hpp>

namespace bsle {

std::string report_json(const EstimateReport& r) {
    nlohmann::ordered_json j;
    j["value"] = r.value;
    j["std_error"] = r.std_error;
    j["n"] = r.n;
    j["seed"] = r.seed;
    j["stream_base"] = r.stream_base;
    j["step"] = r.step;
    j["horizon"] = r.horizon;
    j["tail_tol"] = r.tail_tol;
    return j.dump();
}

}  // namespace bsle
