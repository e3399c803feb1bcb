#include "powershave/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "powershave/error.hpp"

namespace powershave {

std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        fail(ErrorKind::io, "sha256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorKind::io, "read failed for '" + path + "'");
    return ss.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

FileDigest digest_file(const std::string& path) { return {path, sha256_file(path)}; }

void write_file_atomic(const std::string& path, std::string_view contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::io, "cannot write '" + tmp + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) fail(ErrorKind::io, "write failed for '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorKind::io, "cannot move output into place at '" + path + "'");
    }
}

namespace {

Json digests_to_json(const std::vector<FileDigest>& v) {
    Json a = Json::array();
    for (const auto& d : v) a.push_back({{"path", d.path}, {"sha256", d.sha256}});
    return a;
}

std::vector<FileDigest> digests_from_json(const Json& a) {
    std::vector<FileDigest> v;
    for (const auto& e : a) v.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>()});
    return v;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

Json manifest_to_json(const RunManifest& m) {
    Json j;
    j["command"] = m.command;
    j["tool_version"] = m.tool_version;
    j["seed"] = m.seed ? Json(*m.seed) : Json(nullptr);
    j["inputs"] = digests_to_json(m.inputs);
    j["configs"] = digests_to_json(m.configs);
    j["outputs"] = digests_to_json(m.outputs);
    j["created_utc"] = m.created_utc;
    return j;
}

RunManifest manifest_from_json(const Json& j) {
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
        m.inputs = digests_from_json(j.at("inputs"));
        m.configs = digests_from_json(j.at("configs"));
        m.outputs = digests_from_json(j.at("outputs"));
        m.created_utc = j.at("created_utc").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, std::string("manifest: ") + e.what());
    }
    return m;
}

void verify_manifest(const RunManifest& m) {
    for (const auto* list : {&m.inputs, &m.configs, &m.outputs}) {
        for (const auto& d : *list) {
            if (d.path.rfind("builtin:", 0) == 0) continue;
            if (sha256_file(d.path) != d.sha256) fail(ErrorKind::corrupt, "digest mismatch for '" + d.path + "'");
        }
    }
}

void write_manifest(const std::string& path, const RunManifest& m) {
    RunManifest stamped = m;
    if (stamped.created_utc.empty()) stamped.created_utc = utc_now();
    write_file_atomic(path, manifest_to_json(stamped).dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::parse, "manifest '" + path + "': " + e.what());
    }
    return manifest_from_json(j);
}

}  // namespace powershave
