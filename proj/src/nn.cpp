#include "dabf/nn.hpp"

#include "dabf/container_io.hpp"

namespace dabf::nn {

namespace {

std::string activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "leaky_relu";
}

Activation activation_from(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "leaky_relu") return Activation::leaky_relu;
    throw DataError("unknown activation: " + s);
}

std::string output_name(OutputKind o) { return o == OutputKind::linear ? "linear" : "sigmoid"; }

OutputKind output_from(const std::string& s) {
    if (s == "linear") return OutputKind::linear;
    if (s == "sigmoid") return OutputKind::sigmoid;
    throw DataError("unknown output kind: " + s);
}

} // namespace

nlohmann::json spec_to_json(const MlpSpec& spec) {
    return {{"input_dim", spec.input_dim},
            {"hidden", spec.hidden},
            {"output_dim", spec.output_dim},
            {"activation", activation_name(spec.activation)},
            {"leaky_slope", spec.leaky_slope},
            {"output", output_name(spec.output)}};
}

MlpSpec spec_from_json(const nlohmann::json& j) {
    MlpSpec spec;
    spec.input_dim = j.at("input_dim").get<int>();
    spec.hidden = j.at("hidden").get<std::vector<int>>();
    spec.output_dim = j.at("output_dim").get<int>();
    spec.activation = activation_from(j.at("activation").get<std::string>());
    spec.leaky_slope = j.at("leaky_slope").get<double>();
    spec.output = output_from(j.at("output").get<std::string>());
    return spec;
}

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, const Mlp<float>*>>& nets,
                     std::int64_t step, const nlohmann::json& meta) {
    nlohmann::json net_list = nlohmann::json::array();
    std::size_t total = 0;
    for (const auto& [name, mlp] : nets) {
        net_list.push_back({{"name", name},
                            {"spec", spec_to_json(mlp->spec)},
                            {"num_params", mlp->num_params()}});
        total += mlp->num_params();
    }
    nlohmann::json header = {{"format", "dabf-checkpoint/1"},
                             {"step", step},
                             {"nets", net_list},
                             {"meta", meta}};
    std::vector<float> blob;
    blob.reserve(total);
    for (const auto& [name, mlp] : nets) {
        for (std::size_t l = 0; l < mlp->weights.size(); ++l) {
            const auto& w = mlp->weights[l].value();
            blob.insert(blob.end(), w.data(), w.data() + w.size());
            const auto& b = mlp->biases[l].value();
            blob.insert(blob.end(), b.data(), b.data() + b.size());
        }
    }
    io::write_container(path, header, blob.data(), blob.size());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const io::Container c = io::read_container(path);
    if (c.header.value("format", "") != "dabf-checkpoint/1")
        throw DataError("not a checkpoint container: " + path.string());
    Checkpoint ckpt;
    ckpt.header = c.header;
    ckpt.step = c.header.at("step").get<std::int64_t>();
    std::size_t at = 0;
    for (const auto& entry : c.header.at("nets")) {
        const std::string name = entry.at("name").get<std::string>();
        Mlp<float> mlp;
        mlp.spec = spec_from_json(entry.at("spec"));
        mlp.spec.validate();
        for (const auto& [out, in] : mlp.spec.layer_dims()) {
            const std::size_t wn = static_cast<std::size_t>(out) * in;
            if (at + wn + out > c.data.size())
                throw DataError("checkpoint blob too short: " + path.string());
            ad::Mat<float> w(out, in);
            std::copy(c.data.begin() + at, c.data.begin() + at + wn, w.data());
            at += wn;
            ad::Mat<float> b(out, 1);
            std::copy(c.data.begin() + at, c.data.begin() + at + out, b.data());
            at += out;
            mlp.weights.push_back(ad::leaf<float>(std::move(w)));
            mlp.biases.push_back(ad::leaf<float>(std::move(b)));
        }
        ckpt.nets.emplace(name, std::move(mlp));
    }
    if (at != c.data.size()) throw DataError("checkpoint blob size mismatch: " + path.string());
    return ckpt;
}

} // namespace dabf::nn
