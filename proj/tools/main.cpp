#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dabf/config.hpp"
#include "dabf/errors.hpp"
#include "dabf/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    bool small = false;
    bool micro = false;
    std::string data_root;
    std::string output_root;
    std::optional<std::uint64_t> seed;
    bool deterministic = false; // accepted for compatibility; execution is single-threaded
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    auto* config = cmd->add_option("--config", opts.config_path, "Run configuration JSON file");
    cmd->add_flag("--small", opts.small, "Use the built-in small CI profile")->excludes(config);
    cmd->add_flag("--micro", opts.micro, "Use the built-in micro smoke profile")->excludes(config);
    cmd->add_option("--data-root", opts.data_root,
                    "Override the data root (also via DABF_DATA_ROOT)");
    cmd->add_option("--output-root", opts.output_root, "Override the output root");
    cmd->add_option("--seed", opts.seed, "Override the master seed");
    cmd->add_flag("--deterministic", opts.deterministic,
                  "Force deterministic single-threaded execution");
}

dabf::RunConfig resolve_config(const CommonOpts& opts) {
    dabf::RunConfig config;
    if (!opts.config_path.empty())
        config = dabf::load_run_config(opts.config_path);
    else if (opts.small)
        config = dabf::small_config();
    else if (opts.micro)
        config = dabf::micro_config();
    else
        config = dabf::default_config();
    if (const char* env_root = std::getenv("DABF_DATA_ROOT"); env_root && *env_root)
        config.data_root = env_root;
    if (!opts.data_root.empty()) config.data_root = opts.data_root;
    if (!opts.output_root.empty()) config.output_root = opts.output_root;
    if (opts.seed) config.master_seed = *opts.seed;
    config.validate();
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain-adaptive deep-network ultrasound beamforming toolkit"};
    app.require_subcommand(1);

    CommonOpts sim_opts;
    bool force = false;
    auto* sim = app.add_subcommand("simulate", "Generate channel-data frames and manifests");
    add_common(sim, sim_opts);
    sim->add_flag("--force", force, "Overwrite existing outputs");

    CommonOpts build_opts;
    auto* build = app.add_subcommand("build-dataset", "Extract aperture-domain training datasets");
    add_common(build, build_opts);

    CommonOpts train_opts;
    std::string mode = "da";
    auto* train_cmd = app.add_subcommand("train", "Train the beamformer networks");
    add_common(train_cmd, train_opts);
    train_cmd->add_option("--mode", mode, "Training mode")
        ->check(CLI::IsMember({"da", "baseline"}));

    CommonOpts beam_opts;
    std::string method = "das";
    std::string split = "test";
    auto* beam = app.add_subcommand("beamform", "Beamform frames with a chosen method");
    add_common(beam, beam_opts);
    beam->add_option("--method", method, "Beamforming method")
        ->check(CLI::IsMember({"das", "gcf", "dnn", "dadnn"}));
    beam->add_option("--split", split, "Manifest split to beamform")
        ->check(CLI::IsMember({"train", "validation", "test"}));

    CommonOpts eval_opts;
    auto* eval = app.add_subcommand("evaluate", "Compute CNR/CR tables and comparison figures");
    add_common(eval, eval_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const auto config = resolve_config(sim_opts);
            const auto manifest = dabf::run_simulate(config, force);
            std::printf("simulated %zu frames under %s\n", manifest.frames.size(),
                        config.data_root.string().c_str());
        } else if (build->parsed()) {
            const auto config = resolve_config(build_opts);
            dabf::run_build_dataset(config);
            std::printf("datasets written under %s\n",
                        (config.data_root / "datasets").string().c_str());
        } else if (train_cmd->parsed()) {
            const auto config = resolve_config(train_opts);
            const auto outcome = dabf::run_train(
                config, mode == "da" ? dabf::TrainMode::da : dabf::TrainMode::baseline,
                train_opts.seed);
            std::printf("trained (%s): best step %lld, validation CNR %.3f dB, checkpoint %s\n",
                        mode.c_str(), static_cast<long long>(outcome.best_step),
                        outcome.best_val_cnr, outcome.checkpoint.string().c_str());
        } else if (beam->parsed()) {
            const auto config = resolve_config(beam_opts);
            dabf::run_beamform(config, method, split);
            std::printf("beamformed split '%s' with %s under %s\n", split.c_str(), method.c_str(),
                        (config.output_root / "beamformed" / method).string().c_str());
        } else if (eval->parsed()) {
            const auto config = resolve_config(eval_opts);
            const auto outcome = dabf::run_evaluate(config);
            for (const auto& [m, by_domain] : outcome.stats)
                for (const auto& [domain, stats] : by_domain)
                    std::printf("%-6s %-6s CNR %6.3f +/- %5.3f dB   CR %6.3f +/- %5.3f dB   n=%d\n",
                                m.c_str(), domain.c_str(), stats.cnr_mean, stats.cnr_std,
                                stats.cr_mean, stats.cr_std, stats.n);
            std::printf("tables and montages under %s\n",
                        (config.output_root / "eval").string().c_str());
        }
    } catch (const dabf::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const dabf::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const dabf::TrainingFault& e) {
        std::fprintf(stderr, "training fault: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
