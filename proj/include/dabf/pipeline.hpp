#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dabf/config.hpp"
#include "dabf/evaluation.hpp"
#include "dabf/trainer.hpp"

namespace dabf {

struct FrameEntry {
    std::string id;
    std::string path; // relative to data_root
    std::string split; // train / validation / test
    Domain domain = Domain::source;
    PhantomSpec phantom;
    std::uint64_t phantom_seed = 0;
    std::optional<std::uint64_t> shift_seed;
    std::optional<double> snr_db;
};

struct DatasetManifest {
    std::vector<FrameEntry> frames;

    std::vector<const FrameEntry*> select(const std::string& split, Domain domain) const;
};

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Pipeline stage entry points shared by the CLI and the acceptance suite.
// All seeds derive from config.master_seed; reruns are bit-reproducible.
DatasetManifest run_simulate(const RunConfig& config, bool force = false);
void run_build_dataset(const RunConfig& config);

struct TrainOutcome {
    std::filesystem::path checkpoint;
    double best_val_cnr = 0;
    std::int64_t best_step = -1;
};

TrainOutcome run_train(const RunConfig& config, TrainMode mode,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

// Methods: das, gcf, dnn (source-only checkpoint, source slots), dadnn
// (domain-adaptive checkpoint, slots chosen by the frame's domain tag).
void run_beamform(const RunConfig& config, const std::string& method,
                  const std::string& split = "test");

struct EvaluationOutcome {
    // method -> (domain -> stats over the test split)
    std::map<std::string, std::map<std::string, MethodStats>> stats;
};

EvaluationOutcome run_evaluate(const RunConfig& config);

// Shared helpers.
PixelGrid training_grid(const RunConfig& config);
PixelGrid test_grid(const RunConfig& config);
FocusedTensor focused_tensor_for(const RunConfig& config, const FrameEntry& entry,
                                 const PixelGrid& grid);
ValidationContext make_validation_context(const RunConfig& config,
                                          const DatasetManifest& manifest,
                                          const std::map<std::string, RoiPair>& rois);

Eigen::MatrixXcd beamform_tensor(const RunConfig& config, const FocusedTensor& tensor,
                                 const std::string& method,
                                 const nn::Regressor<float>* regressor);

void save_complex_grid(const std::filesystem::path& path, const Eigen::MatrixXcd& grid,
                       const PixelGrid& pixel_grid, const nlohmann::json& meta);
std::pair<Eigen::MatrixXcd, PixelGrid> load_complex_grid(const std::filesystem::path& path);

} // namespace dabf
