#include "dabf/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "dabf/container_io.hpp"
#include "dabf/errors.hpp"

namespace dabf {

RoiPair default_roi(const PhantomSpec& phantom, double clearance, double lesion_fraction) {
    const double r = phantom.cyst_radius();
    RoiPair roi;
    roi.lesion = {phantom.cyst_lateral, phantom.cyst_depth, lesion_fraction * r};
    const double r_in = r + clearance;
    const double r_out = std::sqrt(r_in * r_in + roi.lesion.radius * roi.lesion.radius);
    roi.background = {phantom.cyst_lateral, phantom.cyst_depth, r_in, r_out};
    return roi;
}

RoiMasks roi_masks(const PixelGrid& grid, const RoiPair& roi, int min_pixels) {
    RoiMasks masks;
    const int D = grid.num_depths(), L = grid.num_lateral();
    for (int d = 0; d < D; ++d) {
        for (int l = 0; l < L; ++l) {
            const double x = grid.lateral[l], z = grid.depth[d];
            const Eigen::Index idx = static_cast<Eigen::Index>(d) + static_cast<Eigen::Index>(l) * D;
            const double dl = std::hypot(x - roi.lesion.center_lateral, z - roi.lesion.center_depth);
            const double db = std::hypot(x - roi.background.center_lateral,
                                         z - roi.background.center_depth);
            const bool in_lesion = dl <= roi.lesion.radius;
            const bool in_background =
                db >= roi.background.inner_radius && db <= roi.background.outer_radius;
            if (in_lesion && in_background)
                throw ConfigError("roi regions overlap on the grid");
            if (in_lesion) masks.lesion.push_back(idx);
            if (in_background) masks.background.push_back(idx);
        }
    }
    if (static_cast<int>(masks.lesion.size()) < min_pixels ||
        static_cast<int>(masks.background.size()) < min_pixels)
        throw ConfigError("roi region has fewer than " + std::to_string(min_pixels) +
                          " pixels on this grid (lesion " + std::to_string(masks.lesion.size()) +
                          ", background " + std::to_string(masks.background.size()) + ")");
    return masks;
}

namespace {

struct Moments {
    double mean = 0, var = 0; // population variance
};

Moments region_moments(const Eigen::Ref<const Eigen::MatrixXd>& envelope,
                       const std::vector<Eigen::Index>& mask) {
    double sum = 0, sum2 = 0;
    for (const Eigen::Index idx : mask) {
        const double v = envelope(idx % envelope.rows(), idx / envelope.rows());
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(mask.size());
    Moments m;
    m.mean = sum / n;
    m.var = std::max(0.0, sum2 / n - m.mean * m.mean);
    return m;
}

void check_uncompressed(const Eigen::Ref<const Eigen::MatrixXd>& envelope) {
    if (envelope.minCoeff() < 0.0)
        throw DataError("metrics require the uncompressed (nonnegative) envelope");
    if (envelope.maxCoeff() <= 0.0) throw DataError("metrics require a nonzero envelope");
}

} // namespace

double cnr_db(const Eigen::Ref<const Eigen::MatrixXd>& envelope, const PixelGrid& grid,
              const RoiPair& roi) {
    check_uncompressed(envelope);
    const RoiMasks masks = roi_masks(grid, roi);
    const Moments lesion = region_moments(envelope, masks.lesion);
    const Moments background = region_moments(envelope, masks.background);
    const double denom = std::sqrt(background.var + lesion.var);
    if (denom == 0.0) throw DataError("cnr undefined: both region variances are zero");
    const double num = std::abs(background.mean - lesion.mean);
    if (num == 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(num / denom);
}

double cr_db(const Eigen::Ref<const Eigen::MatrixXd>& envelope, const PixelGrid& grid,
             const RoiPair& roi) {
    check_uncompressed(envelope);
    const RoiMasks masks = roi_masks(grid, roi);
    const double mu_l = region_moments(envelope, masks.lesion).mean;
    const double mu_b = region_moments(envelope, masks.background).mean;
    if (mu_b <= 0.0) throw DataError("cr undefined: background mean is zero");
    if (mu_l == 0.0) return std::numeric_limits<double>::infinity();
    return -20.0 * std::log10(mu_l / mu_b);
}

MethodStats evaluate_method(const std::string& method,
                            const std::vector<FrameMetrics>& per_frame) {
    if (per_frame.empty()) throw DataError("evaluate_method: no frames");
    MethodStats stats;
    stats.method = method;
    stats.n = static_cast<int>(per_frame.size());
    stats.per_frame = per_frame;
    double cnr_sum = 0, cnr_sum2 = 0, cr_sum = 0, cr_sum2 = 0;
    for (const auto& f : per_frame) {
        cnr_sum += f.cnr;
        cnr_sum2 += f.cnr * f.cnr;
        cr_sum += f.cr;
        cr_sum2 += f.cr * f.cr;
    }
    const double n = stats.n;
    stats.cnr_mean = cnr_sum / n;
    stats.cnr_std = std::sqrt(std::max(0.0, cnr_sum2 / n - stats.cnr_mean * stats.cnr_mean));
    stats.cr_mean = cr_sum / n;
    stats.cr_std = std::sqrt(std::max(0.0, cr_sum2 / n - stats.cr_mean * stats.cr_mean));
    return stats;
}

void write_stats_table(const std::filesystem::path& path, const std::vector<MethodStats>& stats) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "# std is the population standard deviation\n";
    out << "method\tmetric\tmean\tstd\tn\n";
    char line[256];
    for (const auto& s : stats) {
        std::snprintf(line, sizeof(line), "%s\tcnr_db\t%.6f\t%.6f\t%d\n", s.method.c_str(),
                      s.cnr_mean, s.cnr_std, s.n);
        out << line;
        std::snprintf(line, sizeof(line), "%s\tcr_db\t%.6f\t%.6f\t%d\n", s.method.c_str(),
                      s.cr_mean, s.cr_std, s.n);
        out << line;
    }
}

void save_roi_manifest(const std::filesystem::path& path,
                       const std::map<std::string, RoiPair>& rois) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [frame, roi] : rois) {
        list.push_back({{"frame", frame},
                        {"lesion",
                         {{"center_lateral", roi.lesion.center_lateral},
                          {"center_depth", roi.lesion.center_depth},
                          {"radius", roi.lesion.radius}}},
                        {"background",
                         {{"center_lateral", roi.background.center_lateral},
                          {"center_depth", roi.background.center_depth},
                          {"inner_radius", roi.background.inner_radius},
                          {"outer_radius", roi.background.outer_radius}}}});
    }
    io::write_json_file(path, {{"format", "dabf-roi/1"}, {"rois", list}});
}

std::map<std::string, RoiPair> load_roi_manifest(const std::filesystem::path& path) {
    const nlohmann::json j = io::read_json_file(path);
    if (j.value("format", "") != "dabf-roi/1")
        throw DataError("not a roi manifest: " + path.string());
    std::map<std::string, RoiPair> rois;
    for (const auto& entry : j.at("rois")) {
        RoiPair roi;
        const auto& l = entry.at("lesion");
        roi.lesion = {l.at("center_lateral").get<double>(), l.at("center_depth").get<double>(),
                      l.at("radius").get<double>()};
        const auto& b = entry.at("background");
        roi.background = {b.at("center_lateral").get<double>(), b.at("center_depth").get<double>(),
                          b.at("inner_radius").get<double>(), b.at("outer_radius").get<double>()};
        rois.emplace(entry.at("frame").get<std::string>(), roi);
    }
    return rois;
}

} // namespace dabf
