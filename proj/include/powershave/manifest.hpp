#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "powershave/json.hpp"

namespace powershave {

inline constexpr const char* kToolVersion = "0.1.0";

struct FileDigest {
    std::string path;
    std::string sha256;
    bool operator==(const FileDigest&) const = default;
};

struct RunManifest {
    std::string command;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> configs;  // path is "builtin:<name>" for configs without a file
    std::optional<std::uint64_t> seed;
    std::string tool_version = kToolVersion;
    std::vector<FileDigest> outputs;
    std::string created_utc;  // the only field that varies between identical runs
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);
FileDigest digest_file(const std::string& path);

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

// Recomputes every file digest; throws a corrupt error naming the first mismatch.
void verify_manifest(const RunManifest& m);

// Write through a sibling temporary file and rename into place.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

}  // namespace powershave
