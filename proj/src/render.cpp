#include "dabf/render.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "dabf/container_io.hpp"
#include "dabf/errors.hpp"

namespace dabf {

GrayImage bmode_to_gray(const BModeImage& image) {
    GrayImage out;
    out.height = static_cast<int>(image.intensity_db.rows());
    out.width = static_cast<int>(image.intensity_db.cols());
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
    const double dr = image.dynamic_range;
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            const double v = (image.intensity_db(r, c) + dr) / dr; // 0..1
            out.at(r, c) = static_cast<std::uint8_t>(std::clamp(v * 255.0 + 0.5, 0.0, 255.0));
        }
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
}

void save_bmode(const std::filesystem::path& path, const BModeImage& image) {
    nlohmann::json header = {{"format", "dabf-bmode/1"},
                             {"rows", image.intensity_db.rows()},
                             {"cols", image.intensity_db.cols()},
                             {"dynamic_range", image.dynamic_range},
                             {"lateral_m", std::vector<double>(image.grid.lateral.begin(),
                                                               image.grid.lateral.end())},
                             {"depth_m", std::vector<double>(image.grid.depth.begin(),
                                                             image.grid.depth.end())}};
    std::vector<float> blob;
    blob.reserve(image.intensity_db.size());
    for (Eigen::Index r = 0; r < image.intensity_db.rows(); ++r)
        for (Eigen::Index c = 0; c < image.intensity_db.cols(); ++c)
            blob.push_back(static_cast<float>(image.intensity_db(r, c)));
    io::write_container(path, header, blob.data(), blob.size());
}

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used.
struct Glyph {
    char ch;
    std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const Glyph* find_glyph(char c) {
    const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const auto& g : kFont)
        if (g.ch == upper) return &g;
    return nullptr;
}

} // namespace

void draw_text(GrayImage& image, int row, int col, const std::string& text) {
    int x = col;
    for (const char c : text) {
        const Glyph* g = find_glyph(c);
        if (g) {
            for (int r = 0; r < 7; ++r) {
                for (int b = 0; b < 5; ++b) {
                    const int rr = row + r, cc = x + b;
                    if (rr < 0 || rr >= image.height || cc < 0 || cc >= image.width) continue;
                    image.at(rr, cc) = (g->rows[r] >> (4 - b)) & 1 ? 255 : 0;
                }
            }
        }
        x += 6;
    }
}

GrayImage montage(const std::vector<MontagePanel>& panels) {
    if (panels.empty()) throw DataError("montage: no panels");
    const int separator = 2;
    const int caption_band = 10;
    int height = 0, width = 0;
    for (const auto& p : panels) {
        height = std::max(height, p.image.height);
        width += p.image.width;
    }
    width += separator * (static_cast<int>(panels.size()) - 1);
    height += caption_band;

    GrayImage out;
    out.width = width;
    out.height = height;
    out.pixels.assign(static_cast<std::size_t>(width) * height, 32);
    int x = 0;
    for (const auto& p : panels) {
        for (int r = 0; r < p.image.height; ++r)
            for (int c = 0; c < p.image.width; ++c) out.at(caption_band + r, x + c) = p.image.at(r, c);
        for (int c = 0; c < p.image.width; ++c)
            for (int r = 0; r < caption_band; ++r) out.at(r, x + c) = 0;
        draw_text(out, 1, x + 2, p.caption);
        x += p.image.width + separator;
    }
    return out;
}

} // namespace dabf
