#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace dabf::io {

// Binary container: one line of JSON (the structured-text header) terminated
// by '\n', followed by a flat little-endian float32 blob. Used for channel
// frames, beamformed grids, dB images, sample datasets and checkpoints.
struct Container {
    nlohmann::json header;
    std::vector<float> data;
};

void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     const float* data, std::size_t count);
Container read_container(const std::filesystem::path& path);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

// Line-delimited structured records (metrics logs).
void append_jsonl(const std::filesystem::path& path, const nlohmann::json& record);

} // namespace dabf::io
