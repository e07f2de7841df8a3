#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace bsle {

std::uint64_t fnv1a64(std::string_view text);

// Snapshot file: {"fingerprint", "stages", "checksum"} where the checksum
// covers the stages payload. Writes are atomic (tmp file + rename).
void save_checkpoint_file(const std::string& path, const std::string& fingerprint,
                          const nlohmann::ordered_json& stages);

// nullopt when no file exists. A parse failure, checksum mismatch or
// fingerprint mismatch throws: a corrupted checkpoint is never resumed.
std::optional<nlohmann::ordered_json> load_checkpoint_file(
    const std::string& path, const std::string& fingerprint);

}  // namespace bsle
