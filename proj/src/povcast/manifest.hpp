#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace povcast {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr int kManifestVersion = 1;

struct Artifact {
    std::string path;  // relative to the output directory
    std::string sha256;
};

struct InputRecord {
    std::string role;  // "data" or "samples"
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string command;
    nlohmann::json config;  // fully resolved options; feeding it back reruns the command
    std::uint64_t seed = 0;
    std::vector<InputRecord> inputs;
    std::vector<Artifact> artifacts;
    nlohmann::json extra = nlohmann::json::object();
    double duration_seconds = 0.0;
    std::string created_utc;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Hash of the named files in order, each contributing "name\0<sha256>\n".
std::string sha256_files(const std::filesystem::path& dir, const std::vector<std::string>& names);

std::string utc_timestamp();

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);
RunManifest read_manifest(const std::filesystem::path& path);

} // namespace povcast
