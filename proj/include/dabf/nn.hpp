#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dabf/acoustics.hpp" // Domain
#include "dabf/autodiff.hpp"
#include "dabf/errors.hpp"
#include "dabf/rng.hpp"

namespace dabf::nn {

enum class Activation { relu, leaky_relu };
enum class OutputKind { linear, sigmoid };

struct MlpSpec {
    int input_dim = 0;
    std::vector<int> hidden;
    int output_dim = 0;
    Activation activation = Activation::relu;
    double leaky_slope = 0.2;
    OutputKind output = OutputKind::linear;

    void validate() const {
        if (input_dim <= 0 || output_dim <= 0) throw ConfigError("mlp dims must be positive");
        for (int h : hidden)
            if (h <= 0) throw ConfigError("mlp hidden widths must be positive");
    }

    // (fan_out, fan_in) per layer.
    std::vector<std::pair<int, int>> layer_dims() const {
        std::vector<std::pair<int, int>> dims;
        int in = input_dim;
        for (int h : hidden) {
            dims.emplace_back(h, in);
            in = h;
        }
        dims.emplace_back(output_dim, in);
        return dims;
    }
};

nlohmann::json spec_to_json(const MlpSpec& spec);
MlpSpec spec_from_json(const nlohmann::json& j);

template <class T>
struct Mlp {
    MlpSpec spec;
    std::vector<ad::Var<T>> weights; // (out x in), column-major storage
    std::vector<ad::Var<T>> biases;  // (out x 1), zero-initialized

    // Fan-in-scaled init: W ~ N(0, 2/fan_in), biases zero, deterministic per seed.
    static Mlp init(const MlpSpec& spec, std::uint64_t seed) {
        spec.validate();
        Mlp mlp;
        mlp.spec = spec;
        Rng rng(seed);
        for (const auto& [out, in] : spec.layer_dims()) {
            ad::Mat<T> w(out, in);
            const T std_dev = static_cast<T>(std::sqrt(2.0 / in));
            for (Eigen::Index i = 0; i < w.size(); ++i)
                w.data()[i] = std_dev * static_cast<T>(rng.normal());
            mlp.weights.push_back(ad::leaf<T>(std::move(w)));
            mlp.biases.push_back(ad::leaf<T>(ad::Mat<T>::Zero(out, 1)));
        }
        return mlp;
    }

    ad::Var<T> forward(const ad::Var<T>& x) const {
        if (x.rows() != spec.input_dim) throw DataError("mlp forward: input dimension mismatch");
        ad::Var<T> h = x;
        const std::size_t layers = weights.size();
        for (std::size_t l = 0; l < layers; ++l) {
            h = ad::add(ad::matmul(weights[l], h), ad::broadcast_col(biases[l], h.cols()));
            if (l + 1 < layers) {
                h = spec.activation == Activation::relu
                        ? ad::relu(h)
                        : ad::leaky_relu(h, static_cast<T>(spec.leaky_slope));
            } else if (spec.output == OutputKind::sigmoid) {
                h = ad::sigmoid(h);
            }
        }
        return h;
    }

    // Graph-free forward for inference and validation scoring.
    ad::Mat<T> forward_eval(const ad::Mat<T>& x) const {
        if (x.rows() != spec.input_dim) throw DataError("mlp forward: input dimension mismatch");
        ad::Mat<T> h = x;
        const std::size_t layers = weights.size();
        for (std::size_t l = 0; l < layers; ++l) {
            ad::Mat<T> z = weights[l].value() * h;
            z.colwise() += Eigen::Matrix<T, Eigen::Dynamic, 1>(biases[l].value().col(0));
            if (l + 1 < layers) {
                if (spec.activation == Activation::relu) {
                    h = z.cwiseMax(T(0));
                } else {
                    const T slope = static_cast<T>(spec.leaky_slope);
                    h = ((z.array() > T(0)).template cast<T>() * (T(1) - slope) + slope).matrix()
                            .cwiseProduct(z);
                }
            } else if (spec.output == OutputKind::sigmoid) {
                h = (T(1) / (T(1) + (-z.array()).exp())).matrix();
            } else {
                h = std::move(z);
            }
        }
        return h;
    }

    void collect_params(std::vector<ad::Var<T>>& out) const {
        for (std::size_t l = 0; l < weights.size(); ++l) {
            out.push_back(weights[l]);
            out.push_back(biases[l]);
        }
    }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l)
            n += weights[l].value().size() + biases[l].value().size();
        return n;
    }

    void scale_final_layer(T s) {
        weights.back().mutable_value() *= s;
        biases.back().mutable_value() *= s;
    }
};

// Residual generator: G(x) = x + MLP(x). The final layer is scaled down at
// init so the untrained map is near-identity.
template <class T>
struct Generator {
    Mlp<T> mlp;

    static Generator init(int d, const std::vector<int>& hidden, double leaky_slope,
                          std::uint64_t seed, T output_scale) {
        MlpSpec spec{d, hidden, d, Activation::leaky_relu, leaky_slope, OutputKind::linear};
        Generator g{Mlp<T>::init(spec, seed)};
        g.mlp.scale_final_layer(output_scale);
        return g;
    }

    ad::Var<T> forward(const ad::Var<T>& x) const { return ad::add(x, mlp.forward(x)); }
    ad::Mat<T> forward_eval(const ad::Mat<T>& x) const { return x + mlp.forward_eval(x); }
};

template <class T>
struct Discriminator {
    Mlp<T> mlp;

    static Discriminator init(int d, const std::vector<int>& hidden, double leaky_slope,
                              std::uint64_t seed) {
        MlpSpec spec{d, hidden, 1, Activation::leaky_relu, leaky_slope, OutputKind::sigmoid};
        return Discriminator{Mlp<T>::init(spec, seed)};
    }

    ad::Var<T> forward(const ad::Var<T>& x) const { return mlp.forward(x); }
    ad::Mat<T> forward_eval(const ad::Mat<T>& x) const { return mlp.forward_eval(x); }
};

// Single shared regressor with the feature-augmentation input layout
// (shared, source-specific, target-specific): F_s(x) = F(x, x, 0) and
// F_t(x) = F(x, 0, x).
template <class T>
struct Regressor {
    Mlp<T> mlp; // 3d -> d
    int d = 0;

    static Regressor init(int d, const std::vector<int>& hidden, std::uint64_t seed) {
        MlpSpec spec{3 * d, hidden, d, Activation::relu, 0.2, OutputKind::linear};
        return Regressor{Mlp<T>::init(spec, seed), d};
    }

    ad::Var<T> forward(const ad::Var<T>& x, Domain domain) const {
        if (x.rows() != d) throw DataError("regressor forward: input dimension mismatch");
        const ad::Var<T> zero = ad::constant<T>(ad::Mat<T>::Zero(d, x.cols()));
        const std::vector<ad::Var<T>> parts = domain == Domain::source
                                                  ? std::vector<ad::Var<T>>{x, x, zero}
                                                  : std::vector<ad::Var<T>>{x, zero, x};
        return mlp.forward(ad::concat_rows(parts));
    }

    ad::Mat<T> forward_eval(const ad::Mat<T>& x, Domain domain) const {
        if (x.rows() != d) throw DataError("regressor forward: input dimension mismatch");
        ad::Mat<T> aug = ad::Mat<T>::Zero(3 * d, x.cols());
        aug.topRows(d) = x;
        if (domain == Domain::source)
            aug.middleRows(d, d) = x;
        else
            aug.bottomRows(d) = x;
        return mlp.forward_eval(aug);
    }
};

// Named set of all trainable models.
template <class T>
struct ModelSet {
    Generator<T> g_st, g_ts;
    Discriminator<T> d_s, d_t;
    Regressor<T> f;
};

// Checkpoint: one line of JSON (specs, seeds, step count) + float32 blob of
// all parameters in declaration order (per net: per layer, W column-major
// then bias).
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, const Mlp<float>*>>& nets,
                     std::int64_t step, const nlohmann::json& meta);

struct Checkpoint {
    nlohmann::json header;
    std::map<std::string, Mlp<float>> nets;
    std::int64_t step = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace dabf::nn
