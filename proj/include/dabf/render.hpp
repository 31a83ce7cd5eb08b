#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dabf/beamformers.hpp"

namespace dabf {

// 8-bit grayscale raster; row-major, origin top-left (shallow depths up).
struct GrayImage {
    int width = 0, height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    std::uint8_t at(int row, int col) const {
        return pixels[static_cast<std::size_t>(row) * width + col];
    }
};

// Maps [-dynamic_range, 0] dB to [0, 255].
GrayImage bmode_to_gray(const BModeImage& image);

void write_pgm(const std::filesystem::path& path, const GrayImage& image);

// Saves the dB values themselves as a binary container with grid metadata.
void save_bmode(const std::filesystem::path& path, const BModeImage& image);

// Stamps 5x7 bitmap text into the image (white on black backing strip).
void draw_text(GrayImage& image, int row, int col, const std::string& text);

struct MontagePanel {
    GrayImage image;
    std::string caption;
};

// Side-by-side panels with separators and per-panel captions.
GrayImage montage(const std::vector<MontagePanel>& panels);

} // namespace dabf
