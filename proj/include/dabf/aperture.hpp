#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "dabf/acoustics.hpp"

namespace dabf {

struct PixelGrid {
    Eigen::VectorXd lateral; // m, strictly increasing
    Eigen::VectorXd depth;   // m, strictly increasing

    int num_lateral() const { return static_cast<int>(lateral.size()); }
    int num_depths() const { return static_cast<int>(depth.size()); }
    void validate() const;
};

// Default grid: lateral spacing = pitch, axial spacing = c / (2 fs),
// covering [center - halfwidth, center + halfwidth] in depth.
PixelGrid make_band_grid(const ArrayConfig& config, double depth_center, double depth_halfwidth,
                         double lateral_halfwidth);

struct AnalyticFrame {
    Eigen::MatrixXcd samples; // [num_time_samples x num_elements]
    double t0 = 0.0;
    ArrayConfig config;
    Domain domain_tag = Domain::source;
};

// Per-element analytic signal (Hilbert transform); the real part of the
// output equals the input exactly.
AnalyticFrame analytic_signal(const ChannelFrame& frame);

// Time-delayed aperture-domain signals: one complex value per (pixel, element).
struct FocusedTensor {
    PixelGrid grid;
    ArrayConfig config;
    Domain domain_tag = Domain::source;
    std::vector<std::complex<double>> values; // index ((d * L) + l) * E + e

    int num_depths() const { return grid.num_depths(); }
    int num_lateral() const { return grid.num_lateral(); }
    int num_elements() const { return config.num_elements; }
    std::complex<double>& at(int d, int l, int e) {
        return values[(static_cast<std::size_t>(d) * num_lateral() + l) * num_elements() + e];
    }
    const std::complex<double>& at(int d, int l, int e) const {
        return values[(static_cast<std::size_t>(d) * num_lateral() + l) * num_elements() + e];
    }
};

FocusedTensor focus(const AnalyticFrame& frame, const PixelGrid& grid,
                    double transmit_offset = 0.0);

enum class WindowLabel : std::uint8_t { accept = 0, reject = 1, excluded = 2 };

// Labels for every sliding kernel window: reject iff all kernel depths lie
// inside the cyst disk, accept iff all lie outside, excluded otherwise.
struct WindowLabelMap {
    int kernel_depths = 0;
    int num_window_rows = 0; // num_depths - kernel_depths + 1
    int num_lateral = 0;
    std::vector<WindowLabel> labels; // index i * num_lateral + j

    WindowLabel at(int i, int j) const { return labels[static_cast<std::size_t>(i) * num_lateral + j]; }
    std::int64_t count(WindowLabel l) const;
};

WindowLabelMap label_windows(const PixelGrid& grid, const PhantomSpec& phantom, int kernel_depths);

// Aperture vector stacking: real parts then imaginary parts, each
// concatenated through the kernel depths. d = 2 * kernel_depths * elements.
int sample_dim(int kernel_depths, int num_elements);
Eigen::VectorXd stack_window(const FocusedTensor& tensor, int window_row, int lateral,
                             int kernel_depths);
void unstack_into(const Eigen::Ref<const Eigen::VectorXd>& v, int kernel_depths, int num_elements,
                  std::vector<std::complex<double>>& block);

// All sliding windows (step of one depth) in canonical order
// w = lateral * num_window_rows + window_row; one column per window.
Eigen::MatrixXd extract_windows(const FocusedTensor& tensor, int kernel_depths);

// Overlap-average reconstruction: each tensor cell is the mean of all window
// outputs covering it. `outputs` must hold one column per canonical window.
FocusedTensor reconstruct(const Eigen::Ref<const Eigen::MatrixXd>& outputs, const PixelGrid& grid,
                          const ArrayConfig& config, Domain domain_tag, int kernel_depths);

// Scales x to unit rms in place and returns the scale that was divided out
// (1.0 for vanishingly small vectors, which are left untouched).
double normalize_sample(Eigen::VectorXd& x);

struct SampleDataset {
    int d = 0;
    int kernel_depths = 0;
    bool labeled = false;
    Domain domain = Domain::source;
    Eigen::MatrixXf x; // d x N
    Eigen::MatrixXf y; // d x N (labeled only)
    std::int64_t accept_count = 0;
    std::int64_t reject_count = 0;
    std::string normalization = "per_sample_rms";
    std::uint64_t seed = 0;

    std::int64_t size() const { return x.cols(); }
};

// Balanced accept/reject pairs from one focused tensor (seeded subsampling,
// count(accept) == count(reject) == num_pairs / 2). num_pairs must be even.
SampleDataset extract_balanced_pairs(const FocusedTensor& tensor, const WindowLabelMap& labels,
                                     std::int64_t num_pairs, std::uint64_t seed);

SampleDataset extract_unlabeled(const FocusedTensor& tensor, int kernel_depths,
                                std::int64_t num_samples, std::uint64_t seed);

// Concatenates datasets with identical shape metadata.
SampleDataset concat_datasets(const std::vector<SampleDataset>& parts);

// Samples file: float32 rows of length d (+d for y when labeled) plus a JSON
// sidecar (<path>.json) with d, kernel_depths, counts, seeds, normalization.
void save_dataset(const std::filesystem::path& path, const SampleDataset& ds);
SampleDataset load_dataset(const std::filesystem::path& path);

} // namespace dabf
