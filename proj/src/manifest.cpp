#include "tss/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>

#include "tss/common.hpp"

namespace tss {

std::string sha256_hex_of_files(const std::vector<std::string>& paths) {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("sha256 init failed");
    }
    char buf[1 << 16];
    for (const std::string& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            EVP_MD_CTX_free(ctx);
            throw IoError("cannot hash missing input: " + path);
        }
        while (in) {
            in.read(buf, sizeof(buf));
            const std::streamsize got = in.gcount();
            if (got > 0) EVP_DigestUpdate(ctx, buf, static_cast<size_t>(got));
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

RunManifest make_manifest(const std::string& command, const nlohmann::json& config,
                          const std::vector<uint64_t>& seeds,
                          const std::vector<std::string>& inputs,
                          const std::vector<std::string>& outputs) {
    RunManifest manifest;
    manifest.command = command;
    manifest.config = config;
    manifest.seeds = seeds;
    manifest.inputs = inputs;
    manifest.outputs = outputs;
    manifest.content_hash = sha256_hex_of_files(inputs);
    return manifest;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config"] = manifest.config;
    j["seeds"] = manifest.seeds;
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    j["content_hash"] = manifest.content_hash;

    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing manifest: " + path);
}

}  // namespace tss
