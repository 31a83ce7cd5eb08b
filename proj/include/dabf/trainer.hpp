#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "dabf/aperture.hpp"
#include "dabf/evaluation.hpp"
#include "dabf/losses.hpp"
#include "dabf/nn.hpp"

namespace dabf {

struct TrainSchedule {
    int batch_size = 64;
    int epochs = 50;
    double lr_gan = 2e-4;
    double lr_regressor = 1e-4;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    losses::RegNorm norm = losses::RegNorm::l1;
    double huber_delta = 1.0;
    int log_interval = 50;
    int eval_interval = 0; // steps between validation scans; 0 = end of training only
    double divergence_threshold = 1e6;
};

struct ModelArch {
    std::vector<int> regressor_hidden{1024, 1024, 1024};
    std::vector<int> generator_hidden{512, 512};
    std::vector<int> discriminator_hidden{512, 256};
    double leaky_slope = 0.2;
    double generator_output_scale = 0.05; // final-layer scale for near-identity init
};

enum class TrainMode { da, baseline };

struct ValidationFrame {
    std::string id;
    FocusedTensor tensor;
    RoiPair roi;
};

struct ValidationContext {
    std::vector<ValidationFrame> frames;
    int kernel_depths = 10;
};

struct TrainResult {
    nn::ModelSet<float> models; // checkpoint with the highest validation CNR
    double best_val_cnr = 0;
    std::int64_t best_step = -1;
    std::int64_t total_steps = 0;
    std::filesystem::path best_checkpoint;
};

nn::ModelSet<float> init_models(int d, const ModelArch& arch, std::uint64_t seed);

template <class T>
nn::Mlp<T> clone_mlp(const nn::Mlp<T>& src) {
    nn::Mlp<T> out;
    out.spec = src.spec;
    for (std::size_t l = 0; l < src.weights.size(); ++l) {
        out.weights.push_back(ad::leaf<T>(src.weights[l].value()));
        out.biases.push_back(ad::leaf<T>(src.biases[l].value()));
    }
    return out;
}

template <class T>
nn::ModelSet<T> clone_models(const nn::ModelSet<T>& src) {
    nn::ModelSet<T> out;
    out.g_st.mlp = clone_mlp(src.g_st.mlp);
    out.g_ts.mlp = clone_mlp(src.g_ts.mlp);
    out.d_s.mlp = clone_mlp(src.d_s.mlp);
    out.d_t.mlp = clone_mlp(src.d_t.mlp);
    out.f.mlp = clone_mlp(src.f.mlp);
    out.f.d = src.f.d;
    return out;
}

// Joint training: alternating discriminator step then generator+regressor
// step, adaptive-moment updates, optional validation-CNR model selection.
// Zero-weight loss terms are skipped entirely, so the all-GAN-weights-zero
// configuration follows the same parameter trajectory as train_baseline.
// target_unlabeled may be null only when no target-dependent weight is set.
TrainResult train(TrainMode mode, const SampleDataset& source_pairs,
                  const SampleDataset* target_unlabeled, const ValidationContext* validation,
                  const ModelArch& arch, const losses::LossWeights& weights,
                  const TrainSchedule& sched, std::uint64_t seed,
                  const std::filesystem::path& out_dir = {});

// Standalone source-only regression trainer (the conventional-DNN baseline).
TrainResult train_baseline(const SampleDataset& source_pairs,
                           const ValidationContext* validation, const ModelArch& arch,
                           const losses::LossWeights& weights, const TrainSchedule& sched,
                           std::uint64_t seed, const std::filesystem::path& out_dir = {});

// DNN beamforming over a focused tensor: sliding windows, per-window rms
// normalization, regressor evaluation with the given domain slots, scale
// reapplication, overlap-averaged reconstruction, then DAS.
Eigen::MatrixXcd dnn_beamform(const FocusedTensor& tensor, const nn::Regressor<float>& f,
                              Domain slots, int kernel_depths);

double validation_mean_cnr(const ValidationContext& validation, const nn::Regressor<float>& f,
                           Domain slots);

nn::Regressor<float> load_regressor(const std::filesystem::path& checkpoint_path);

} // namespace dabf
