#include <doctest.h>

#include <fstream>

#include "dabf/evaluation.hpp"
#include "dabf/errors.hpp"

using namespace dabf;

namespace {

// Abstract unit grid (1 m spacing) large enough for the 100-pixel ROI rule.
PixelGrid unit_grid(int half = 24) {
    PixelGrid grid;
    const int n = 2 * half + 1;
    grid.lateral.resize(n);
    grid.depth.resize(n);
    for (int i = 0; i < n; ++i) {
        grid.lateral[i] = i - half;
        grid.depth[i] = i - half;
    }
    return grid;
}

// ROI centered half a pixel off the lattice: pixels come in symmetric groups
// of four, so both regions rasterize to even counts and alternating-value
// fills produce exact moments.
RoiPair even_count_roi(const PixelGrid& grid) {
    RoiPair roi;
    roi.lesion = {0.5, 0.5, 6.5};
    roi.background = {0.5, 0.5, 8.0, 10.9};
    const RoiMasks masks = roi_masks(grid, roi);
    REQUIRE(masks.lesion.size() % 2 == 0);
    REQUIRE(masks.background.size() % 2 == 0);
    return roi;
}

// Fills a region with alternating values so the mean and population variance
// are exact by construction; requires an even pixel count.
void fill_alternating(Eigen::MatrixXd& img, const std::vector<Eigen::Index>& mask, double lo,
                      double hi) {
    REQUIRE(mask.size() % 2 == 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const Eigen::Index idx = mask[i];
        img(idx % img.rows(), idx / img.rows()) = (i % 2 == 0) ? lo : hi;
    }
}

} // namespace

TEST_CASE("cnr and cr reproduce hand-computed moments") {
    const PixelGrid grid = unit_grid();
    const RoiPair roi = even_count_roi(grid);
    const RoiMasks masks = roi_masks(grid, roi);
    REQUIRE(masks.lesion.size() >= 100);
    REQUIRE(masks.background.size() >= 100);
    REQUIRE(masks.lesion.size() % 2 == 0);
    REQUIRE(masks.background.size() % 2 == 0);

    Eigen::MatrixXd envelope = Eigen::MatrixXd::Constant(grid.num_depths(), grid.num_lateral(), 1.0);
    fill_alternating(envelope, masks.lesion, 0.5, 1.5);     // mu = 1,  sigma = 0.5
    fill_alternating(envelope, masks.background, 1.5, 2.5); // mu = 2,  sigma = 0.5

    const double cnr = cnr_db(envelope, grid, roi);
    const double expected_cnr = 20.0 * std::log10(1.0 / std::sqrt(0.5));
    CHECK(cnr == doctest::Approx(expected_cnr).epsilon(1e-9)); // 3.010 dB
    CHECK(expected_cnr == doctest::Approx(3.0103).epsilon(1e-4));

    const double cr = cr_db(envelope, grid, roi);
    CHECK(cr == doctest::Approx(-20.0 * std::log10(0.5)).epsilon(1e-9)); // 6.0206 dB

    // positive scaling invariance: power of two is exact, arbitrary near-exact
    CHECK(cnr_db(4.0 * envelope, grid, roi) == cnr);
    CHECK(cr_db(4.0 * envelope, grid, roi) == cr);
    CHECK(cnr_db(3.0 * envelope, grid, roi) == doctest::Approx(cnr).epsilon(1e-12));

    // mu_l = 0.1 mu_b gives CR = 20 dB
    Eigen::MatrixXd decade = envelope;
    for (const auto idx : masks.lesion) decade(idx % decade.rows(), idx / decade.rows()) = 0.2;
    for (const auto idx : masks.background) decade(idx % decade.rows(), idx / decade.rows()) = 2.0;
    CHECK(cr_db(decade, grid, roi) == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("metric edge cases") {
    const PixelGrid grid = unit_grid();
    const RoiPair roi = even_count_roi(grid);

    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(grid.num_depths(), grid.num_lateral(), 2.0);
    // equal means: -inf sentinel (undefined contrast), variances nonzero
    const RoiMasks masks = roi_masks(grid, roi);
    fill_alternating(flat, masks.lesion, 1.5, 2.5);
    fill_alternating(flat, masks.background, 1.5, 2.5);
    CHECK(cnr_db(flat, grid, roi) == -std::numeric_limits<double>::infinity());

    // zero variances -> undefined metric
    Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(grid.num_depths(), grid.num_lateral(), 1.0);
    CHECK_THROWS_AS(cnr_db(constant, grid, roi), DataError);

    // log-compressed (negative) input is rejected
    Eigen::MatrixXd compressed = constant;
    compressed(0, 0) = -10.0;
    CHECK_THROWS_AS(cnr_db(compressed, grid, roi), DataError);
    CHECK_THROWS_AS(cr_db(compressed, grid, roi), DataError);

    // empty lesion mean -> +inf sentinel
    Eigen::MatrixXd dark = constant;
    for (const auto idx : masks.lesion) dark(idx % dark.rows(), idx / dark.rows()) = 0.0;
    CHECK(cr_db(dark, grid, roi) == std::numeric_limits<double>::infinity());
}

TEST_CASE("roi validation") {
    const PixelGrid grid = unit_grid();
    RoiPair overlapping;
    overlapping.lesion = {0.0, 0.0, 9.0};
    overlapping.background = {0.0, 0.0, 8.0, 10.4};
    CHECK_THROWS_AS(roi_masks(grid, overlapping), ConfigError);

    RoiPair tiny;
    tiny.lesion = {0.0, 0.0, 2.0}; // ~13 pixels on the unit grid
    tiny.background = {0.0, 0.0, 8.0, 10.4};
    CHECK_THROWS_AS(roi_masks(grid, tiny), ConfigError);
}

TEST_CASE("default roi geometry") {
    PhantomSpec phantom;
    const RoiPair roi = default_roi(phantom);
    CHECK(roi.lesion.radius == doctest::Approx(0.7 * phantom.cyst_radius()));
    CHECK(roi.background.inner_radius == doctest::Approx(phantom.cyst_radius() + 1e-3));
    const double lesion_area = M_PI * roi.lesion.radius * roi.lesion.radius;
    const double annulus_area =
        M_PI * (roi.background.outer_radius * roi.background.outer_radius -
                roi.background.inner_radius * roi.background.inner_radius);
    CHECK(annulus_area == doctest::Approx(lesion_area).epsilon(1e-12));
}

TEST_CASE("method statistics use population std") {
    const MethodStats single = evaluate_method("das", {{"f0", 5.0, 12.0}});
    CHECK(single.cnr_std == 0.0);
    CHECK(single.cr_std == 0.0);
    CHECK(single.n == 1);

    const MethodStats pair = evaluate_method("das", {{"f0", 4.0, 10.0}, {"f1", 6.0, 14.0}});
    CHECK(pair.cnr_mean == doctest::Approx(5.0));
    CHECK(pair.cnr_std == doctest::Approx(1.0)); // population, not sample
    CHECK(pair.cr_mean == doctest::Approx(12.0));
    CHECK(pair.cr_std == doctest::Approx(2.0));

    CHECK_THROWS_AS(evaluate_method("das", {}), DataError);
}

TEST_CASE("stats table and roi manifest round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "dabf_eval_io";
    std::filesystem::create_directories(dir);
    write_stats_table(dir / "stats.tsv",
                      {evaluate_method("das", {{"f0", 4.0, 10.0}, {"f1", 6.0, 14.0}})});
    std::ifstream in(dir / "stats.tsv");
    std::string header_comment, header;
    std::getline(in, header_comment);
    std::getline(in, header);
    CHECK(header == "method\tmetric\tmean\tstd\tn");
    std::string row;
    std::getline(in, row);
    CHECK(row.find("das\tcnr_db\t5.000000\t1.000000\t2") == 0);

    std::map<std::string, RoiPair> rois;
    rois["frame_a"] = RoiPair{{1e-3, 70e-3, 2e-3}, {1e-3, 70e-3, 3e-3, 4e-3}};
    save_roi_manifest(dir / "rois.json", rois);
    const auto loaded = load_roi_manifest(dir / "rois.json");
    REQUIRE(loaded.count("frame_a") == 1);
    CHECK(loaded.at("frame_a").lesion.radius == 2e-3);
    CHECK(loaded.at("frame_a").background.outer_radius == 4e-3);
}
