#include "bsle/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace bsle {

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void save_checkpoint_file(const std::string& path, const std::string& fingerprint,
                          const nlohmann::ordered_json& stages) {
    nlohmann::ordered_json j;
    j["fingerprint"] = fingerprint;
    j["stages"] = stages;
    j["checksum"] = fnv1a64(stages.dump());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp);
        out << j.dump();
    }
    std::filesystem::rename(tmp, path);
}

std::optional<nlohmann::ordered_json> load_checkpoint_file(
    const std::string& path, const std::string& fingerprint) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception&) {
        throw std::runtime_error("checkpoint " + path +
                                 " is corrupted; refusing to resume. "
                                 "Delete the file to start fresh.");
    }
    if (!j.contains("fingerprint") || !j.contains("stages") || !j.contains("checksum") ||
        j["checksum"].get<std::uint64_t>() !=
            fnv1a64(j["stages"].dump())) {
        throw std::runtime_error("checkpoint " + path +
                                 " is corrupted; refusing to resume. "
                                 "Delete the file to start fresh.");
    }
    if (j["fingerprint"].get<std::string>() != fingerprint) {
        throw std::runtime_error("checkpoint " + path +
                                 " belongs to a different configuration; "
                                 "refusing to resume. Delete the file to start fresh.");
    }
    return j["stages"];
}

}  // namespace bsle
