#include "dabf/config.hpp"

#include "dabf/container_io.hpp"
#include "dabf/errors.hpp"

namespace dabf {

void RunConfig::validate() const {
    array.validate();
    phantom.validate();
    weights.validate();
    if (pipeline.kernel_depths < 1) throw ConfigError("kernel_depths must be >= 1");
    if (pipeline.pairs_per_frame < 2 || pipeline.pairs_per_frame % 2 != 0)
        throw ConfigError("pairs_per_frame must be a positive even count");
    if (splits.source_train < 1 || splits.source_test < 1)
        throw ConfigError("source splits must be nonempty");
    if (schedule.batch_size < 1 || schedule.epochs < 1)
        throw ConfigError("training schedule must have positive batch size and epochs");
}

RunConfig default_config() {
    RunConfig config; // struct defaults carry the paper-scale parameters
    config.schedule.eval_interval = 2000;
    return config;
}

RunConfig small_config() {
    RunConfig config;
    config.name = "small";
    config.array.num_elements = 16;
    config.array.transmit_focus_depth = 20e-3;
    config.phantom.cyst_depth = 20e-3;
    config.phantom.cyst_diameter = 2.5e-3;
    config.phantom.field_extent = {-6e-3, 6e-3, 14e-3, 26e-3};
    config.splits = {8, 8, 2, 6, 6};
    config.pipeline.kernel_depths = 4;
    config.pipeline.train_band_halfwidth = 3e-3;
    config.pipeline.test_band_halfwidth = 3.2e-3;
    config.pipeline.lateral_halfwidth = 3.6e-3;
    config.pipeline.pairs_per_frame = 400;
    config.arch.regressor_hidden = {256, 256};
    config.arch.generator_hidden = {128, 128};
    config.arch.discriminator_hidden = {128, 64};
    config.schedule.epochs = 48;
    config.schedule.eval_interval = 400;
    config.schedule.log_interval = 100;
    return config;
}

RunConfig micro_config() {
    RunConfig config;
    config.name = "micro";
    config.array.num_elements = 8;
    config.array.transmit_focus_depth = 15e-3;
    config.phantom.cyst_depth = 15e-3;
    config.phantom.cyst_diameter = 2.4e-3;
    config.phantom.scatterer_density = 10.0;
    config.phantom.field_extent = {-5e-3, 5e-3, 10e-3, 20e-3};
    config.splits = {2, 2, 1, 2, 2};
    config.pipeline.kernel_depths = 2;
    config.pipeline.train_band_halfwidth = 2.2e-3;
    config.pipeline.test_band_halfwidth = 2.6e-3;
    config.pipeline.lateral_halfwidth = 3.2e-3;
    config.pipeline.pairs_per_frame = 100;
    config.arch.regressor_hidden = {32, 32};
    config.arch.generator_hidden = {32};
    config.arch.discriminator_hidden = {32, 16};
    config.schedule.epochs = 4;
    config.schedule.batch_size = 16;
    config.schedule.eval_interval = 0;
    config.schedule.log_interval = 10;
    return config;
}

namespace {

nlohmann::json extent_to_json(const Extent& e) {
    return {{"lateral_min", e.lateral_min},
            {"lateral_max", e.lateral_max},
            {"depth_min", e.depth_min},
            {"depth_max", e.depth_max}};
}

Extent extent_from_json(const nlohmann::json& j) {
    return {j.at("lateral_min").get<double>(), j.at("lateral_max").get<double>(),
            j.at("depth_min").get<double>(), j.at("depth_max").get<double>()};
}

} // namespace

nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["data_root"] = c.data_root.string();
    j["output_root"] = c.output_root.string();
    j["master_seed"] = c.master_seed;
    j["array"] = {{"num_elements", c.array.num_elements},
                  {"pitch", c.array.pitch},
                  {"center_frequency", c.array.center_frequency},
                  {"sampling_frequency", c.array.sampling_frequency},
                  {"sound_speed", c.array.sound_speed},
                  {"transmit_focus_depth", c.array.transmit_focus_depth}};
    j["pulse"] = {{"fractional_bandwidth", c.pulse.fractional_bandwidth},
                  {"amplitude", c.pulse.amplitude}};
    j["phantom"] = {{"cyst_lateral", c.phantom.cyst_lateral},
                    {"cyst_depth", c.phantom.cyst_depth},
                    {"cyst_diameter", c.phantom.cyst_diameter},
                    {"scatterer_density", c.phantom.scatterer_density},
                    {"field_extent", extent_to_json(c.phantom.field_extent)}};
    j["shift"] = {{"phase_screen_rms", c.shift.phase_screen_rms},
                  {"phase_screen_correlation", c.shift.phase_screen_correlation},
                  {"gain_ripple_db", c.shift.gain_ripple_db}};
    if (c.shift.clutter_to_signal_db)
        j["shift"]["clutter_to_signal_db"] = *c.shift.clutter_to_signal_db;
    j["splits"] = {{"source_train", c.splits.source_train},
                   {"target_train", c.splits.target_train},
                   {"target_val", c.splits.target_val},
                   {"source_test", c.splits.source_test},
                   {"target_test", c.splits.target_test}};
    j["pipeline"] = {{"kernel_depths", c.pipeline.kernel_depths},
                     {"train_band_halfwidth", c.pipeline.train_band_halfwidth},
                     {"test_band_halfwidth", c.pipeline.test_band_halfwidth},
                     {"lateral_halfwidth", c.pipeline.lateral_halfwidth},
                     {"pairs_per_frame", c.pipeline.pairs_per_frame},
                     {"test_snr_db", c.pipeline.test_snr_db},
                     {"gcf_m0", c.pipeline.gcf_m0},
                     {"dynamic_range_db", c.pipeline.dynamic_range_db}};
    j["weights"] = {{"lambda_s", c.weights.lambda_s},   {"lambda_t", c.weights.lambda_t},
                    {"lambda_c", c.weights.lambda_c},   {"lambda_fs", c.weights.lambda_fs},
                    {"lambda_ft", c.weights.lambda_ft}, {"r1_gamma", c.weights.r1_gamma}};
    j["schedule"] = {{"batch_size", c.schedule.batch_size},
                     {"epochs", c.schedule.epochs},
                     {"lr_gan", c.schedule.lr_gan},
                     {"lr_regressor", c.schedule.lr_regressor},
                     {"norm", losses::to_string(c.schedule.norm)},
                     {"huber_delta", c.schedule.huber_delta},
                     {"log_interval", c.schedule.log_interval},
                     {"eval_interval", c.schedule.eval_interval}};
    j["arch"] = {{"regressor_hidden", c.arch.regressor_hidden},
                 {"generator_hidden", c.arch.generator_hidden},
                 {"discriminator_hidden", c.arch.discriminator_hidden},
                 {"leaky_slope", c.arch.leaky_slope},
                 {"generator_output_scale", c.arch.generator_output_scale}};
    return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c = default_config();
    c.name = j.value("name", c.name);
    if (j.contains("data_root")) c.data_root = j.at("data_root").get<std::string>();
    if (j.contains("output_root")) c.output_root = j.at("output_root").get<std::string>();
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("array")) {
        const auto& a = j.at("array");
        c.array.num_elements = a.value("num_elements", c.array.num_elements);
        c.array.pitch = a.value("pitch", c.array.pitch);
        c.array.center_frequency = a.value("center_frequency", c.array.center_frequency);
        c.array.sampling_frequency = a.value("sampling_frequency", c.array.sampling_frequency);
        c.array.sound_speed = a.value("sound_speed", c.array.sound_speed);
        c.array.transmit_focus_depth =
            a.value("transmit_focus_depth", c.array.transmit_focus_depth);
    }
    if (j.contains("pulse")) {
        const auto& p = j.at("pulse");
        c.pulse.fractional_bandwidth = p.value("fractional_bandwidth", c.pulse.fractional_bandwidth);
        c.pulse.amplitude = p.value("amplitude", c.pulse.amplitude);
    }
    if (j.contains("phantom")) {
        const auto& p = j.at("phantom");
        c.phantom.cyst_lateral = p.value("cyst_lateral", c.phantom.cyst_lateral);
        c.phantom.cyst_depth = p.value("cyst_depth", c.phantom.cyst_depth);
        c.phantom.cyst_diameter = p.value("cyst_diameter", c.phantom.cyst_diameter);
        c.phantom.scatterer_density = p.value("scatterer_density", c.phantom.scatterer_density);
        if (p.contains("field_extent")) c.phantom.field_extent = extent_from_json(p.at("field_extent"));
    }
    if (j.contains("shift")) {
        const auto& s = j.at("shift");
        c.shift.phase_screen_rms = s.value("phase_screen_rms", c.shift.phase_screen_rms);
        c.shift.phase_screen_correlation =
            s.value("phase_screen_correlation", c.shift.phase_screen_correlation);
        c.shift.gain_ripple_db = s.value("gain_ripple_db", c.shift.gain_ripple_db);
        if (s.contains("clutter_to_signal_db") && !s.at("clutter_to_signal_db").is_null())
            c.shift.clutter_to_signal_db = s.at("clutter_to_signal_db").get<double>();
        else
            c.shift.clutter_to_signal_db.reset();
    }
    if (j.contains("splits")) {
        const auto& s = j.at("splits");
        c.splits.source_train = s.value("source_train", c.splits.source_train);
        c.splits.target_train = s.value("target_train", c.splits.target_train);
        c.splits.target_val = s.value("target_val", c.splits.target_val);
        c.splits.source_test = s.value("source_test", c.splits.source_test);
        c.splits.target_test = s.value("target_test", c.splits.target_test);
    }
    if (j.contains("pipeline")) {
        const auto& p = j.at("pipeline");
        c.pipeline.kernel_depths = p.value("kernel_depths", c.pipeline.kernel_depths);
        c.pipeline.train_band_halfwidth =
            p.value("train_band_halfwidth", c.pipeline.train_band_halfwidth);
        c.pipeline.test_band_halfwidth =
            p.value("test_band_halfwidth", c.pipeline.test_band_halfwidth);
        c.pipeline.lateral_halfwidth = p.value("lateral_halfwidth", c.pipeline.lateral_halfwidth);
        c.pipeline.pairs_per_frame = p.value("pairs_per_frame", c.pipeline.pairs_per_frame);
        c.pipeline.test_snr_db = p.value("test_snr_db", c.pipeline.test_snr_db);
        c.pipeline.gcf_m0 = p.value("gcf_m0", c.pipeline.gcf_m0);
        c.pipeline.dynamic_range_db = p.value("dynamic_range_db", c.pipeline.dynamic_range_db);
    }
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        c.weights.lambda_s = w.value("lambda_s", c.weights.lambda_s);
        c.weights.lambda_t = w.value("lambda_t", c.weights.lambda_t);
        c.weights.lambda_c = w.value("lambda_c", c.weights.lambda_c);
        c.weights.lambda_fs = w.value("lambda_fs", c.weights.lambda_fs);
        c.weights.lambda_ft = w.value("lambda_ft", c.weights.lambda_ft);
        c.weights.r1_gamma = w.value("r1_gamma", c.weights.r1_gamma);
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        c.schedule.batch_size = s.value("batch_size", c.schedule.batch_size);
        c.schedule.epochs = s.value("epochs", c.schedule.epochs);
        c.schedule.lr_gan = s.value("lr_gan", c.schedule.lr_gan);
        c.schedule.lr_regressor = s.value("lr_regressor", c.schedule.lr_regressor);
        if (s.contains("norm"))
            c.schedule.norm = losses::reg_norm_from_string(s.at("norm").get<std::string>());
        c.schedule.huber_delta = s.value("huber_delta", c.schedule.huber_delta);
        c.schedule.log_interval = s.value("log_interval", c.schedule.log_interval);
        c.schedule.eval_interval = s.value("eval_interval", c.schedule.eval_interval);
    }
    if (j.contains("arch")) {
        const auto& a = j.at("arch");
        if (a.contains("regressor_hidden"))
            c.arch.regressor_hidden = a.at("regressor_hidden").get<std::vector<int>>();
        if (a.contains("generator_hidden"))
            c.arch.generator_hidden = a.at("generator_hidden").get<std::vector<int>>();
        if (a.contains("discriminator_hidden"))
            c.arch.discriminator_hidden = a.at("discriminator_hidden").get<std::vector<int>>();
        c.arch.leaky_slope = a.value("leaky_slope", c.arch.leaky_slope);
        c.arch.generator_output_scale =
            a.value("generator_output_scale", c.arch.generator_output_scale);
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    try {
        return config_from_json(io::read_json_file(path));
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
    io::write_json_file(path, config_to_json(config));
}

} // namespace dabf
