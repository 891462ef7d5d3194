#include "povcast/manifest.hpp"

#include "povcast/bundle.hpp"
#include "povcast/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <memory>

namespace povcast {

using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::Internal, "sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[digest[k] >> 4];
        out += hex[digest[k] & 15];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

std::string sha256_files(const std::filesystem::path& dir, const std::vector<std::string>& names) {
    std::string acc;
    for (const auto& name : names) {
        acc += name;
        acc += '\0';
        acc += sha256_file(dir / name);
        acc += '\n';
    }
    return sha256_hex(acc);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json RunManifest::to_json() const {
    json j;
    j["manifest_version"] = kManifestVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config;
    j["inputs"] = json::array();
    for (const auto& in : inputs) {
        j["inputs"].push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
    }
    j["artifacts"] = json::array();
    for (const auto& a : artifacts) j["artifacts"].push_back({{"path", a.path}, {"sha256", a.sha256}});
    j["extra"] = extra;
    j["duration_seconds"] = duration_seconds;
    j["created_utc"] = created_utc;
    return j;
}

RunManifest RunManifest::from_json(const json& j) {
    try {
        if (j.at("manifest_version").get<int>() != kManifestVersion) {
            throw FormatError("unsupported manifest version");
        }
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config = j.at("config");
        for (const auto& in : j.at("inputs")) {
            m.inputs.push_back({in.at("role").get<std::string>(), in.at("path").get<std::string>(),
                                in.at("sha256").get<std::string>()});
        }
        for (const auto& a : j.at("artifacts")) {
            m.artifacts.push_back({a.at("path").get<std::string>(), a.at("sha256").get<std::string>()});
        }
        m.extra = j.value("extra", json::object());
        m.duration_seconds = j.value("duration_seconds", 0.0);
        m.created_utc = j.value("created_utc", "");
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
    write_text(dir / kManifestFile, manifest.to_json().dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return RunManifest::from_json(j);
}

} // namespace povcast
