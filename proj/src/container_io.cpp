#include "dabf/container_io.hpp"

#include <bit>
#include <fstream>

#include "dabf/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian; big-endian hosts are not supported");

namespace dabf::io {

void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     const float* data, std::size_t count) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    const std::string head = header.dump();
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.put('\n');
    if (count > 0)
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(count * sizeof(float)));
    if (!out) throw DataError("write failed: " + path.string());
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    std::string head;
    if (!std::getline(in, head)) throw DataError("missing container header: " + path.string());
    Container c;
    try {
        c.header = nlohmann::json::parse(head);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad container header in " + path.string() + ": " + e.what());
    }
    const auto body_start = in.tellg();
    in.seekg(0, std::ios::end);
    const auto body_bytes = static_cast<std::size_t>(in.tellg() - body_start);
    if (body_bytes % sizeof(float) != 0)
        throw DataError("container blob not a whole number of float32s: " + path.string());
    c.data.resize(body_bytes / sizeof(float));
    in.seekg(body_start);
    if (!c.data.empty())
        in.read(reinterpret_cast<char*>(c.data.data()), static_cast<std::streamsize>(body_bytes));
    if (!in) throw DataError("read failed: " + path.string());
    return c;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad JSON in " + path.string() + ": " + e.what());
    }
}

void append_jsonl(const std::filesystem::path& path, const nlohmann::json& record) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << record.dump() << "\n";
}

} // namespace dabf::io
