#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dabf/acoustics.hpp"
#include "dabf/losses.hpp"
#include "dabf/trainer.hpp"

namespace dabf {

struct SplitCounts {
    int source_train = 12;
    int target_train = 12;
    int target_val = 2;
    int source_test = 21;
    int target_test = 9;
};

struct PipelineOptions {
    int kernel_depths = 10;
    double train_band_halfwidth = 5e-3; // around the transmit focus
    double test_band_halfwidth = 8e-3;
    double lateral_halfwidth = 0.0;     // 0 = array footprint
    std::int64_t pairs_per_frame = 2782;
    double test_snr_db = 50.0;
    int gcf_m0 = 1;
    double dynamic_range_db = 60.0;
};

// One config file defines a reproducible run end to end: simulation,
// datasets, training and evaluation all derive their seeds from master_seed.
struct RunConfig {
    std::string name = "default";
    std::filesystem::path data_root = "data";
    std::filesystem::path output_root = "out";
    ArrayConfig array;
    PulseSpec pulse;
    PhantomSpec phantom; // template; per-frame rng seeds are derived
    ShiftSpec shift;     // template; per-frame rng seeds are derived
    SplitCounts splits;
    PipelineOptions pipeline;
    losses::LossWeights weights;
    TrainSchedule schedule;
    ModelArch arch;
    std::uint64_t master_seed = 20260809;

    double lateral_halfwidth_resolved() const {
        return pipeline.lateral_halfwidth > 0
                   ? pipeline.lateral_halfwidth
                   : 0.5 * (array.num_elements - 1) * array.pitch;
    }
    int sample_dimension() const { return 2 * pipeline.kernel_depths * array.num_elements; }
    void validate() const;
};

RunConfig default_config();

// CI profile: 16 elements, 4-depth kernel, shallow focus, small nets; the
// whole pipeline runs on a laptop CPU in minutes.
RunConfig small_config();

// Smoke profile for CLI integration tests (seconds end to end).
RunConfig micro_config();

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

} // namespace dabf
