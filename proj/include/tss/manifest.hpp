#pragma once
// Run manifests: a JSON snapshot of a CLI invocation (config, seeds, input
// and output paths, content hash of the inputs) written into every run
// directory.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace tss {

struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::vector<uint64_t> seeds;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string content_hash;  // sha256 over the input files' bytes, in order
};

std::string sha256_hex_of_files(const std::vector<std::string>& paths);

RunManifest make_manifest(const std::string& command, const nlohmann::json& config,
                          const std::vector<uint64_t>& seeds,
                          const std::vector<std::string>& inputs,
                          const std::vector<std::string>& outputs);

void write_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace tss
