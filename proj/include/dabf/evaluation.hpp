#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dabf/acoustics.hpp"
#include "dabf/aperture.hpp"

namespace dabf {

struct DiskRoi {
    double center_lateral = 0, center_depth = 0, radius = 0; // m
};

struct AnnulusRoi {
    double center_lateral = 0, center_depth = 0;
    double inner_radius = 0, outer_radius = 0; // m
};

struct RoiPair {
    DiskRoi lesion;
    AnnulusRoi background;
};

// Lesion disk of 0.7x the cyst radius at the cyst center; background annulus
// of equal area at the same depth with 1 mm clearance from the cyst boundary.
RoiPair default_roi(const PhantomSpec& phantom, double clearance = 1e-3,
                    double lesion_fraction = 0.7);

struct RoiMasks {
    std::vector<Eigen::Index> lesion;     // linear indices into the image
    std::vector<Eigen::Index> background;
};

// Rasterizes the ROI pair onto the grid, checking disjointness and the
// minimum pixel count per region.
RoiMasks roi_masks(const PixelGrid& grid, const RoiPair& roi, int min_pixels = 100);

// Contrast-to-noise ratio in dB over the uncompressed envelope:
// 20 log10(|mu_b - mu_l| / sqrt(var_b + var_l)), population moments.
// Returns -inf when the means coincide; throws when both variances vanish
// or the input is not a nonnegative envelope.
double cnr_db(const Eigen::Ref<const Eigen::MatrixXd>& envelope, const PixelGrid& grid,
              const RoiPair& roi);

// Contrast ratio in dB: -20 log10(mu_l / mu_b); +inf for an empty lesion mean.
double cr_db(const Eigen::Ref<const Eigen::MatrixXd>& envelope, const PixelGrid& grid,
             const RoiPair& roi);

struct FrameMetrics {
    std::string frame_id;
    double cnr = 0, cr = 0;
};

struct MethodStats {
    std::string method;
    double cnr_mean = 0, cnr_std = 0; // population std
    double cr_mean = 0, cr_std = 0;
    int n = 0;
    std::vector<FrameMetrics> per_frame;
};

MethodStats evaluate_method(const std::string& method,
                            const std::vector<FrameMetrics>& per_frame);

// Delimited text, one row per (method, metric) with mean, std (population)
// and frame count.
void write_stats_table(const std::filesystem::path& path, const std::vector<MethodStats>& stats);

// ROI manifest: JSON list of {frame, lesion, background} geometries in meters.
void save_roi_manifest(const std::filesystem::path& path,
                       const std::map<std::string, RoiPair>& rois);
std::map<std::string, RoiPair> load_roi_manifest(const std::filesystem::path& path);

} // namespace dabf
