#include "dabf/trainer.hpp"

#include <cmath>
#include <numeric>

#include "dabf/beamformers.hpp"
#include "dabf/container_io.hpp"
#include "dabf/rng.hpp"

namespace dabf {

namespace {

using ad::Mat;
using ad::Var;

// Endless shuffled index stream; reshuffles whenever exhausted.
class IndexStream {
public:
    IndexStream(std::int64_t n, std::uint64_t seed) : rng_(seed) {
        order_.resize(static_cast<std::size_t>(n));
        std::iota(order_.begin(), order_.end(), std::int64_t{0});
        cursor_ = order_.size(); // shuffle on first draw
    }

    void fill(int batch, std::vector<std::int64_t>& out) {
        out.clear();
        for (int i = 0; i < batch; ++i) {
            if (cursor_ >= order_.size()) {
                rng_.shuffle(order_);
                cursor_ = 0;
            }
            out.push_back(order_[cursor_++]);
        }
    }

private:
    std::vector<std::int64_t> order_;
    std::size_t cursor_ = 0;
    Rng rng_;
};

Mat<float> gather(const Eigen::MatrixXf& data, const std::vector<std::int64_t>& idx) {
    Mat<float> out(data.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = data.col(idx[j]);
    return out;
}

class Adam {
public:
    Adam(std::vector<Var<float>> params, double lr, double b1, double b2, double eps)
        : params_(std::move(params)), lr_(static_cast<float>(lr)), b1_(static_cast<float>(b1)),
          b2_(static_cast<float>(b2)), eps_(static_cast<float>(eps)) {
        for (const auto& p : params_) {
            m_.push_back(Mat<float>::Zero(p.rows(), p.cols()));
            v_.push_back(Mat<float>::Zero(p.rows(), p.cols()));
        }
    }

    void step(const ad::GradMap<float>& grads) {
        ++t_;
        const float bc1 = 1.0f - std::pow(b1_, static_cast<float>(t_));
        const float bc2 = 1.0f - std::pow(b2_, static_cast<float>(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            const Mat<float> g = grads.get(params_[i]).value();
            m_[i] = b1_ * m_[i] + (1.0f - b1_) * g;
            v_[i] = b2_ * v_[i] + (1.0f - b2_) * g.cwiseProduct(g);
            params_[i].mutable_value().array() -=
                lr_ * (m_[i].array() / bc1) /
                ((v_[i].array() / bc2).sqrt() + eps_);
        }
    }

private:
    std::vector<Var<float>> params_;
    std::vector<Mat<float>> m_, v_;
    float lr_, b1_, b2_, eps_;
    long t_ = 0;
};

std::vector<Var<float>> mlp_params(const nn::Mlp<float>& mlp) {
    std::vector<Var<float>> out;
    mlp.collect_params(out);
    return out;
}

void guard_term(const char* name, float value, double threshold) {
    if (!std::isfinite(value) || std::abs(value) > threshold)
        throw TrainingFault(std::string("training fault: loss term '") + name +
                            "' = " + std::to_string(value));
}

struct MetricsSink {
    std::filesystem::path path; // empty = disabled
    void write(const nlohmann::json& record) const {
        if (!path.empty()) io::append_jsonl(path, record);
    }
};

void save_train_checkpoint(const std::filesystem::path& path, const nn::ModelSet<float>& m,
                           TrainMode mode, std::int64_t step, const nlohmann::json& meta) {
    std::vector<std::pair<std::string, const nn::Mlp<float>*>> nets;
    if (mode == TrainMode::da) {
        nets = {{"g_st", &m.g_st.mlp},
                {"g_ts", &m.g_ts.mlp},
                {"d_s", &m.d_s.mlp},
                {"d_t", &m.d_t.mlp},
                {"f", &m.f.mlp}};
    } else {
        nets = {{"f", &m.f.mlp}};
    }
    nn::save_checkpoint(path, nets, step, meta);
}

} // namespace

nn::ModelSet<float> init_models(int d, const ModelArch& arch, std::uint64_t seed) {
    nn::ModelSet<float> m;
    const auto scale = static_cast<float>(arch.generator_output_scale);
    m.g_st = nn::Generator<float>::init(d, arch.generator_hidden, arch.leaky_slope,
                                        derive_seed(seed, "init_g_st"), scale);
    m.g_ts = nn::Generator<float>::init(d, arch.generator_hidden, arch.leaky_slope,
                                        derive_seed(seed, "init_g_ts"), scale);
    m.d_s = nn::Discriminator<float>::init(d, arch.discriminator_hidden, arch.leaky_slope,
                                           derive_seed(seed, "init_d_s"));
    m.d_t = nn::Discriminator<float>::init(d, arch.discriminator_hidden, arch.leaky_slope,
                                           derive_seed(seed, "init_d_t"));
    m.f = nn::Regressor<float>::init(d, arch.regressor_hidden, derive_seed(seed, "init_f"));
    return m;
}

Eigen::MatrixXcd dnn_beamform(const FocusedTensor& tensor, const nn::Regressor<float>& f,
                              Domain slots, int kernel_depths) {
    const Eigen::MatrixXd windows = extract_windows(tensor, kernel_depths);
    const Eigen::Index d = windows.rows(), count = windows.cols();
    if (static_cast<int>(d) != f.d)
        throw DataError("dnn_beamform: window dimension does not match the regressor");
    Eigen::MatrixXd outputs(d, count);
    const Eigen::Index chunk = 512;
    Eigen::VectorXd scales(count);
    for (Eigen::Index start = 0; start < count; start += chunk) {
        const Eigen::Index n = std::min(chunk, count - start);
        Mat<float> batch(d, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::VectorXd col = windows.col(start + j);
            scales[start + j] = normalize_sample(col);
            batch.col(j) = col.cast<float>();
        }
        const Mat<float> net_out = f.forward_eval(batch, slots);
        for (Eigen::Index j = 0; j < n; ++j)
            outputs.col(start + j) = net_out.col(j).cast<double>() * scales[start + j];
    }
    const FocusedTensor cleaned =
        reconstruct(outputs, tensor.grid, tensor.config, tensor.domain_tag, kernel_depths);
    return das(cleaned);
}

double validation_mean_cnr(const ValidationContext& validation, const nn::Regressor<float>& f,
                           Domain slots) {
    if (validation.frames.empty()) throw DataError("validation context has no frames");
    double sum = 0;
    for (const auto& frame : validation.frames) {
        const Eigen::MatrixXcd img = dnn_beamform(frame.tensor, f, slots, validation.kernel_depths);
        sum += cnr_db(img.cwiseAbs(), frame.tensor.grid, frame.roi);
    }
    return sum / static_cast<double>(validation.frames.size());
}

nn::Regressor<float> load_regressor(const std::filesystem::path& checkpoint_path) {
    nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint_path);
    auto it = ckpt.nets.find("f");
    if (it == ckpt.nets.end())
        throw DataError("checkpoint has no regressor net: " + checkpoint_path.string());
    nn::Regressor<float> f;
    f.mlp = std::move(it->second);
    if (f.mlp.spec.input_dim % 3 != 0)
        throw DataError("regressor input dim is not 3*d: " + checkpoint_path.string());
    f.d = f.mlp.spec.input_dim / 3;
    return f;
}

TrainResult train(TrainMode mode, const SampleDataset& source_pairs,
                  const SampleDataset* target_unlabeled, const ValidationContext* validation,
                  const ModelArch& arch, const losses::LossWeights& weights,
                  const TrainSchedule& sched, std::uint64_t seed,
                  const std::filesystem::path& out_dir) {
    if (mode == TrainMode::baseline)
        return train_baseline(source_pairs, validation, arch, weights, sched, seed, out_dir);

    weights.validate();
    if (!source_pairs.labeled) throw DataError("train: source dataset must be labeled");
    if (source_pairs.accept_count != source_pairs.reject_count)
        throw DataError("train: source dataset must be balanced");
    const bool need_target = weights.lambda_t > 0 || weights.lambda_c > 0 || weights.lambda_ft > 0;
    const bool disc_active = weights.lambda_s > 0 || weights.lambda_t > 0;
    if ((need_target || disc_active) && target_unlabeled == nullptr)
        throw DataError("train: target dataset required for the configured weights");
    if (target_unlabeled && target_unlabeled->d != source_pairs.d)
        throw DataError("train: source/target dimension mismatch");

    const int d = source_pairs.d;
    nn::ModelSet<float> models = init_models(d, arch, seed);

    const bool g_st_active = weights.lambda_s > 0 || weights.lambda_c > 0;
    const bool g_ts_active = weights.lambda_t > 0 || weights.lambda_c > 0;
    const bool f_active = weights.lambda_fs > 0 || weights.lambda_ft > 0;

    Adam adam_g_st(mlp_params(models.g_st.mlp), sched.lr_gan, sched.adam_beta1, sched.adam_beta2,
                   sched.adam_eps);
    Adam adam_g_ts(mlp_params(models.g_ts.mlp), sched.lr_gan, sched.adam_beta1, sched.adam_beta2,
                   sched.adam_eps);
    Adam adam_d_s(mlp_params(models.d_s.mlp), sched.lr_gan, sched.adam_beta1, sched.adam_beta2,
                  sched.adam_eps);
    Adam adam_d_t(mlp_params(models.d_t.mlp), sched.lr_gan, sched.adam_beta1, sched.adam_beta2,
                  sched.adam_eps);
    Adam adam_f(mlp_params(models.f.mlp), sched.lr_regressor, sched.adam_beta1, sched.adam_beta2,
                sched.adam_eps);

    IndexStream src_stream(source_pairs.size(), derive_seed(seed, "stream_source"));
    std::optional<IndexStream> tgt_stream, src_disc_stream, tgt_disc_stream;
    if (target_unlabeled) {
        tgt_stream.emplace(target_unlabeled->size(), derive_seed(seed, "stream_target"));
        src_disc_stream.emplace(source_pairs.size(), derive_seed(seed, "stream_source_disc"));
        tgt_disc_stream.emplace(target_unlabeled->size(), derive_seed(seed, "stream_target_disc"));
    }

    const std::int64_t steps_per_epoch =
        std::max<std::int64_t>(1, source_pairs.size() / sched.batch_size);
    const std::int64_t total_steps = steps_per_epoch * sched.epochs;
    const Domain val_slots = Domain::target;

    MetricsSink metrics{out_dir.empty() ? std::filesystem::path{}
                                        : out_dir / "metrics.jsonl"};
    TrainResult result;
    result.total_steps = total_steps;
    result.best_val_cnr = -std::numeric_limits<double>::infinity();
    nn::ModelSet<float> best = clone_models(models);
    std::int64_t best_step = -1;

    const auto norm = sched.norm;
    const auto huber_delta = static_cast<float>(sched.huber_delta);
    std::vector<std::int64_t> idx;

    auto run_validation = [&](std::int64_t step) {
        if (!validation || validation->frames.empty()) return;
        const double cnr = validation_mean_cnr(*validation, models.f, val_slots);
        metrics.write({{"step", step}, {"val_cnr", cnr}});
        if (cnr > result.best_val_cnr) {
            result.best_val_cnr = cnr;
            best = clone_models(models);
            best_step = step;
        }
    };

    for (std::int64_t step = 0; step < total_steps; ++step) {
        nlohmann::json record{{"step", step}};
        if (disc_active) {
            src_disc_stream->fill(sched.batch_size, idx);
            const Var<float> xs_d = ad::constant<float>(gather(source_pairs.x, idx));
            tgt_disc_stream->fill(sched.batch_size, idx);
            const Var<float> xt_d = ad::constant<float>(gather(target_unlabeled->x, idx));
            const auto obj = losses::discriminator_objective(models, xs_d, xt_d, weights);
            guard_term("disc_t", obj.disc_t, sched.divergence_threshold);
            guard_term("disc_s", obj.disc_s, sched.divergence_threshold);
            guard_term("r1_t", obj.r1_t, sched.divergence_threshold);
            guard_term("r1_s", obj.r1_s, sched.divergence_threshold);
            const ad::GradMap<float> grads = ad::backward(obj.total);
            if (weights.lambda_s > 0) adam_d_t.step(grads);
            if (weights.lambda_t > 0) adam_d_s.step(grads);
            record["disc_t"] = obj.disc_t;
            record["disc_s"] = obj.disc_s;
            record["r1_t"] = obj.r1_t;
            record["r1_s"] = obj.r1_s;
        }

        src_stream.fill(sched.batch_size, idx);
        const Var<float> xs = ad::constant<float>(gather(source_pairs.x, idx));
        const Var<float> ys = ad::constant<float>(gather(source_pairs.y, idx));
        Var<float> xt;
        if (need_target) {
            tgt_stream->fill(sched.batch_size, idx);
            xt = ad::constant<float>(gather(target_unlabeled->x, idx));
        }
        const auto obj = losses::generator_objective(models, xs, ys, xt, weights, norm, huber_delta);
        guard_term("adv_gst", obj.terms.adv_gst, sched.divergence_threshold);
        guard_term("adv_gts", obj.terms.adv_gts, sched.divergence_threshold);
        guard_term("cyc", obj.terms.cyc, sched.divergence_threshold);
        guard_term("fs", obj.terms.fs, sched.divergence_threshold);
        guard_term("ft1", obj.terms.ft1, sched.divergence_threshold);
        guard_term("ft2", obj.terms.ft2, sched.divergence_threshold);
        if (obj.total.defined()) {
            const ad::GradMap<float> grads = ad::backward(obj.total);
            if (g_st_active) adam_g_st.step(grads);
            if (g_ts_active) adam_g_ts.step(grads);
            if (f_active) adam_f.step(grads);
        }

        if (sched.log_interval > 0 && step % sched.log_interval == 0) {
            record["adv_gst"] = obj.terms.adv_gst;
            record["adv_gts"] = obj.terms.adv_gts;
            record["cyc"] = obj.terms.cyc;
            record["fs"] = obj.terms.fs;
            record["ft1"] = obj.terms.ft1;
            record["ft2"] = obj.terms.ft2;
            record["total"] = losses::weighted_total(obj.terms, weights);
            metrics.write(record);
        }
        if (sched.eval_interval > 0 && (step + 1) % sched.eval_interval == 0 &&
            step + 1 < total_steps)
            run_validation(step + 1);
    }
    run_validation(total_steps);

    if (best_step < 0) {
        best = clone_models(models);
        best_step = total_steps;
        if (!validation) result.best_val_cnr = std::numeric_limits<double>::quiet_NaN();
    }
    result.models = std::move(best);
    result.best_step = best_step;

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const nlohmann::json meta = {{"mode", "da"},
                                     {"seed", seed},
                                     {"best_step", best_step},
                                     {"best_val_cnr", result.best_val_cnr},
                                     {"norm", losses::to_string(sched.norm)}};
        result.best_checkpoint = out_dir / "best.ckpt";
        save_train_checkpoint(result.best_checkpoint, result.models, mode, best_step, meta);
        save_train_checkpoint(out_dir / "final.ckpt", models, mode, total_steps, meta);
        metrics.write({{"best_step", best_step},
                       {"best_val_cnr", result.best_val_cnr},
                       {"total_steps", total_steps}});
    }
    return result;
}

TrainResult train_baseline(const SampleDataset& source_pairs,
                           const ValidationContext* validation, const ModelArch& arch,
                           const losses::LossWeights& weights, const TrainSchedule& sched,
                           std::uint64_t seed, const std::filesystem::path& out_dir) {
    if (!source_pairs.labeled) throw DataError("train: source dataset must be labeled");
    if (source_pairs.accept_count != source_pairs.reject_count)
        throw DataError("train: source dataset must be balanced");

    const int d = source_pairs.d;
    nn::ModelSet<float> models = init_models(d, arch, seed);
    Adam adam_f(mlp_params(models.f.mlp), sched.lr_regressor, sched.adam_beta1, sched.adam_beta2,
                sched.adam_eps);
    IndexStream src_stream(source_pairs.size(), derive_seed(seed, "stream_source"));

    const std::int64_t steps_per_epoch =
        std::max<std::int64_t>(1, source_pairs.size() / sched.batch_size);
    const std::int64_t total_steps = steps_per_epoch * sched.epochs;

    MetricsSink metrics{out_dir.empty() ? std::filesystem::path{}
                                        : out_dir / "metrics.jsonl"};
    TrainResult result;
    result.total_steps = total_steps;
    result.best_val_cnr = -std::numeric_limits<double>::infinity();
    nn::ModelSet<float> best = clone_models(models);
    std::int64_t best_step = -1;

    // The conventional DNN has no target slots; validation scores F_s.
    auto run_validation = [&](std::int64_t step) {
        if (!validation || validation->frames.empty()) return;
        const double cnr = validation_mean_cnr(*validation, models.f, Domain::source);
        metrics.write({{"step", step}, {"val_cnr", cnr}});
        if (cnr > result.best_val_cnr) {
            result.best_val_cnr = cnr;
            best = clone_models(models);
            best_step = step;
        }
    };

    const auto huber_delta = static_cast<float>(sched.huber_delta);
    std::vector<std::int64_t> idx;
    for (std::int64_t step = 0; step < total_steps; ++step) {
        src_stream.fill(sched.batch_size, idx);
        const Var<float> xs = ad::constant<float>(gather(source_pairs.x, idx));
        const Var<float> ys = ad::constant<float>(gather(source_pairs.y, idx));
        const Var<float> fs = losses::loss_fs(models.f, xs, ys, sched.norm, huber_delta);
        guard_term("fs", fs.scalar(), sched.divergence_threshold);
        const Var<float> total = ad::scale(fs, static_cast<float>(weights.lambda_fs));
        const ad::GradMap<float> grads = ad::backward(total);
        adam_f.step(grads);

        if (sched.log_interval > 0 && step % sched.log_interval == 0)
            metrics.write({{"step", step}, {"fs", fs.scalar()}});
        if (sched.eval_interval > 0 && (step + 1) % sched.eval_interval == 0 &&
            step + 1 < total_steps)
            run_validation(step + 1);
    }
    run_validation(total_steps);

    if (best_step < 0) {
        best = clone_models(models);
        best_step = total_steps;
        if (!validation) result.best_val_cnr = std::numeric_limits<double>::quiet_NaN();
    }
    result.models = std::move(best);
    result.best_step = best_step;

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const nlohmann::json meta = {{"mode", "baseline"},
                                     {"seed", seed},
                                     {"best_step", best_step},
                                     {"best_val_cnr", result.best_val_cnr},
                                     {"norm", losses::to_string(sched.norm)}};
        result.best_checkpoint = out_dir / "best.ckpt";
        save_train_checkpoint(result.best_checkpoint, result.models, TrainMode::baseline, best_step,
                              meta);
        save_train_checkpoint(out_dir / "final.ckpt", models, TrainMode::baseline, total_steps,
                              meta);
        metrics.write({{"best_step", best_step},
                       {"best_val_cnr", result.best_val_cnr},
                       {"total_steps", total_steps}});
    }
    return result;
}

} // namespace dabf
