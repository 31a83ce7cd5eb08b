#include "dabf/pipeline.hpp"

#include <algorithm>

#include "dabf/beamformers.hpp"
#include "dabf/container_io.hpp"
#include "dabf/errors.hpp"
#include "dabf/render.hpp"
#include "dabf/rng.hpp"

namespace dabf {

namespace {

nlohmann::json phantom_to_json(const PhantomSpec& p) {
    return {{"cyst_lateral", p.cyst_lateral},
            {"cyst_depth", p.cyst_depth},
            {"cyst_diameter", p.cyst_diameter},
            {"scatterer_density", p.scatterer_density},
            {"rng_seed", p.rng_seed},
            {"field_extent",
             {{"lateral_min", p.field_extent.lateral_min},
              {"lateral_max", p.field_extent.lateral_max},
              {"depth_min", p.field_extent.depth_min},
              {"depth_max", p.field_extent.depth_max}}}};
}

PhantomSpec phantom_from_json(const nlohmann::json& j) {
    PhantomSpec p;
    p.cyst_lateral = j.at("cyst_lateral").get<double>();
    p.cyst_depth = j.at("cyst_depth").get<double>();
    p.cyst_diameter = j.at("cyst_diameter").get<double>();
    p.scatterer_density = j.at("scatterer_density").get<double>();
    p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    const auto& e = j.at("field_extent");
    p.field_extent = {e.at("lateral_min").get<double>(), e.at("lateral_max").get<double>(),
                      e.at("depth_min").get<double>(), e.at("depth_max").get<double>()};
    return p;
}

std::filesystem::path manifest_path(const RunConfig& c) { return c.data_root / "manifest.json"; }
std::filesystem::path roi_path(const RunConfig& c) { return c.data_root / "rois.json"; }
std::filesystem::path source_dataset_path(const RunConfig& c) {
    return c.data_root / "datasets" / "source_train.ds";
}
std::filesystem::path target_dataset_path(const RunConfig& c) {
    return c.data_root / "datasets" / "target_train.ds";
}
std::filesystem::path run_dir(const RunConfig& c, TrainMode mode, std::uint64_t seed) {
    const std::string mode_name = mode == TrainMode::da ? "da" : "baseline";
    return c.output_root / "runs" / (mode_name + "_seed" + std::to_string(seed));
}
std::filesystem::path checkpoint_link(const RunConfig& c, TrainMode mode) {
    const std::string mode_name = mode == TrainMode::da ? "da" : "baseline";
    return c.output_root / "runs" / (mode_name + "_best.ckpt");
}

} // namespace

std::vector<const FrameEntry*> DatasetManifest::select(const std::string& split,
                                                       Domain domain) const {
    std::vector<const FrameEntry*> out;
    for (const auto& f : frames)
        if (f.split == split && f.domain == domain) out.push_back(&f);
    return out;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& f : manifest.frames) {
        nlohmann::json e = {{"id", f.id},
                            {"path", f.path},
                            {"split", f.split},
                            {"domain", to_string(f.domain)},
                            {"phantom", phantom_to_json(f.phantom)},
                            {"phantom_seed", f.phantom_seed}};
        if (f.shift_seed) e["shift_seed"] = *f.shift_seed;
        if (f.snr_db) e["snr_db"] = *f.snr_db;
        list.push_back(e);
    }
    io::write_json_file(path, {{"format", "dabf-manifest/1"}, {"frames", list}});
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    const nlohmann::json j = io::read_json_file(path);
    if (j.value("format", "") != "dabf-manifest/1")
        throw DataError("not a dataset manifest: " + path.string());
    DatasetManifest manifest;
    for (const auto& e : j.at("frames")) {
        FrameEntry f;
        f.id = e.at("id").get<std::string>();
        f.path = e.at("path").get<std::string>();
        f.split = e.at("split").get<std::string>();
        f.domain = domain_from_string(e.at("domain").get<std::string>());
        f.phantom = phantom_from_json(e.at("phantom"));
        f.phantom_seed = e.at("phantom_seed").get<std::uint64_t>();
        if (e.contains("shift_seed")) f.shift_seed = e.at("shift_seed").get<std::uint64_t>();
        if (e.contains("snr_db")) f.snr_db = e.at("snr_db").get<double>();
        manifest.frames.push_back(std::move(f));
    }
    return manifest;
}

PixelGrid training_grid(const RunConfig& config) {
    return make_band_grid(config.array, config.array.transmit_focus_depth,
                          config.pipeline.train_band_halfwidth,
                          config.lateral_halfwidth_resolved());
}

PixelGrid test_grid(const RunConfig& config) {
    return make_band_grid(config.array, config.array.transmit_focus_depth,
                          config.pipeline.test_band_halfwidth,
                          config.lateral_halfwidth_resolved());
}

DatasetManifest run_simulate(const RunConfig& config, bool force) {
    config.validate();
    if (std::filesystem::exists(manifest_path(config)) && !force)
        throw DataError("simulate: output already exists at " + config.data_root.string() +
                        " (use --force to overwrite)");

    DatasetManifest manifest;
    std::map<std::string, RoiPair> rois;
    std::uint64_t frame_index = 0;

    auto emit = [&](const std::string& id, const std::string& split, Domain domain,
                    bool with_noise) {
        FrameEntry entry;
        entry.id = id;
        entry.path = "frames/" + id + ".chd";
        entry.split = split;
        entry.domain = domain;
        entry.phantom = config.phantom;
        entry.phantom_seed = derive_seed(config.master_seed, "phantom", frame_index);
        entry.phantom.rng_seed = entry.phantom_seed;

        const ScattererField field = make_phantom(entry.phantom);
        ChannelFrame frame = simulate_channel_data(field, config.array, config.pulse);
        if (domain == Domain::target) {
            ShiftSpec shift = config.shift;
            shift.rng_seed = derive_seed(config.master_seed, "shift", frame_index);
            entry.shift_seed = shift.rng_seed;
            frame = apply_domain_shift(frame, shift);
        }
        if (with_noise) {
            entry.snr_db = config.pipeline.test_snr_db;
            frame = add_noise(frame, config.pipeline.test_snr_db,
                              derive_seed(config.master_seed, "noise", frame_index));
        }
        save_frame(config.data_root / entry.path, frame,
                   {{"id", id}, {"split", split}, {"phantom_seed", entry.phantom_seed}});
        if (split == "validation" || split == "test") rois[id] = default_roi(entry.phantom);
        manifest.frames.push_back(std::move(entry));
        ++frame_index;
    };

    char id[64];
    for (int i = 0; i < config.splits.source_train; ++i) {
        std::snprintf(id, sizeof(id), "src_train_%02d", i);
        emit(id, "train", Domain::source, false);
    }
    for (int i = 0; i < config.splits.target_train; ++i) {
        std::snprintf(id, sizeof(id), "tgt_train_%02d", i);
        emit(id, "train", Domain::target, false);
    }
    for (int i = 0; i < config.splits.target_val; ++i) {
        std::snprintf(id, sizeof(id), "tgt_val_%02d", i);
        emit(id, "validation", Domain::target, false);
    }
    for (int i = 0; i < config.splits.source_test; ++i) {
        std::snprintf(id, sizeof(id), "src_test_%02d", i);
        emit(id, "test", Domain::source, true);
    }
    for (int i = 0; i < config.splits.target_test; ++i) {
        std::snprintf(id, sizeof(id), "tgt_test_%02d", i);
        emit(id, "test", Domain::target, true);
    }

    save_manifest(manifest_path(config), manifest);
    save_roi_manifest(roi_path(config), rois);
    return manifest;
}

FocusedTensor focused_tensor_for(const RunConfig& config, const FrameEntry& entry,
                                 const PixelGrid& grid) {
    const ChannelFrame frame = load_frame(config.data_root / entry.path);
    return focus(analytic_signal(frame), grid);
}

void run_build_dataset(const RunConfig& config) {
    config.validate();
    const DatasetManifest manifest = load_manifest(manifest_path(config));
    const PixelGrid grid = training_grid(config);
    const int K = config.pipeline.kernel_depths;

    std::vector<SampleDataset> source_parts;
    for (const auto* entry : manifest.select("train", Domain::source)) {
        const FocusedTensor tensor = focused_tensor_for(config, *entry, grid);
        const WindowLabelMap labels = label_windows(grid, entry->phantom, K);
        source_parts.push_back(extract_balanced_pairs(
            tensor, labels, config.pipeline.pairs_per_frame,
            derive_seed(config.master_seed, "extract_" + entry->id)));
    }
    if (source_parts.empty()) throw DataError("build-dataset: no source training frames");
    save_dataset(source_dataset_path(config), concat_datasets(source_parts));

    std::vector<SampleDataset> target_parts;
    for (const auto* entry : manifest.select("train", Domain::target)) {
        const FocusedTensor tensor = focused_tensor_for(config, *entry, grid);
        target_parts.push_back(
            extract_unlabeled(tensor, K, config.pipeline.pairs_per_frame,
                              derive_seed(config.master_seed, "extract_" + entry->id)));
    }
    if (!target_parts.empty()) save_dataset(target_dataset_path(config), concat_datasets(target_parts));
}

ValidationContext make_validation_context(const RunConfig& config,
                                          const DatasetManifest& manifest,
                                          const std::map<std::string, RoiPair>& rois) {
    ValidationContext val;
    val.kernel_depths = config.pipeline.kernel_depths;
    const PixelGrid grid = test_grid(config);
    for (const auto* entry : manifest.select("validation", Domain::target)) {
        auto it = rois.find(entry->id);
        if (it == rois.end())
            throw DataError("validation frame has no roi in the manifest: " + entry->id);
        val.frames.push_back({entry->id, focused_tensor_for(config, *entry, grid), it->second});
    }
    return val;
}

TrainOutcome run_train(const RunConfig& config, TrainMode mode,
                       std::optional<std::uint64_t> seed_override) {
    config.validate();
    const std::uint64_t seed = seed_override.value_or(config.master_seed);
    const SampleDataset source = load_dataset(source_dataset_path(config));
    std::optional<SampleDataset> target;
    if (std::filesystem::exists(target_dataset_path(config)))
        target = load_dataset(target_dataset_path(config));

    const DatasetManifest manifest = load_manifest(manifest_path(config));
    const auto rois = load_roi_manifest(roi_path(config));
    const ValidationContext val = make_validation_context(config, manifest, rois);

    const auto out_dir = run_dir(config, mode, seed);
    const TrainResult result =
        train(mode, source, target ? &*target : nullptr, val.frames.empty() ? nullptr : &val,
              config.arch, config.weights, config.schedule, seed, out_dir);

    // Stable alias for the latest best checkpoint of this mode.
    std::filesystem::copy_file(result.best_checkpoint, checkpoint_link(config, mode),
                               std::filesystem::copy_options::overwrite_existing);
    return {checkpoint_link(config, mode), result.best_val_cnr, result.best_step};
}

Eigen::MatrixXcd beamform_tensor(const RunConfig& config, const FocusedTensor& tensor,
                                 const std::string& method,
                                 const nn::Regressor<float>* regressor) {
    if (method == "das") return das(tensor);
    if (method == "gcf") return gcf(tensor, config.pipeline.gcf_m0);
    if (method == "dnn") {
        if (!regressor) throw DataError("dnn beamforming requires a checkpoint");
        return dnn_beamform(tensor, *regressor, Domain::source, config.pipeline.kernel_depths);
    }
    if (method == "dadnn") {
        if (!regressor) throw DataError("dadnn beamforming requires a checkpoint");
        return dnn_beamform(tensor, *regressor, tensor.domain_tag, config.pipeline.kernel_depths);
    }
    throw ConfigError("unknown beamforming method: " + method);
}

void save_complex_grid(const std::filesystem::path& path, const Eigen::MatrixXcd& grid,
                       const PixelGrid& pixel_grid, const nlohmann::json& meta) {
    nlohmann::json header = {{"format", "dabf-cgrid/1"},
                             {"rows", grid.rows()},
                             {"cols", grid.cols()},
                             {"lateral_m", std::vector<double>(pixel_grid.lateral.begin(),
                                                               pixel_grid.lateral.end())},
                             {"depth_m", std::vector<double>(pixel_grid.depth.begin(),
                                                             pixel_grid.depth.end())},
                             {"meta", meta}};
    std::vector<float> blob;
    blob.reserve(static_cast<std::size_t>(grid.size()) * 2);
    for (Eigen::Index r = 0; r < grid.rows(); ++r) {
        for (Eigen::Index c = 0; c < grid.cols(); ++c) {
            blob.push_back(static_cast<float>(grid(r, c).real()));
            blob.push_back(static_cast<float>(grid(r, c).imag()));
        }
    }
    io::write_container(path, header, blob.data(), blob.size());
}

std::pair<Eigen::MatrixXcd, PixelGrid> load_complex_grid(const std::filesystem::path& path) {
    const io::Container c = io::read_container(path);
    if (c.header.value("format", "") != "dabf-cgrid/1")
        throw DataError("not a complex grid container: " + path.string());
    const auto rows = c.header.at("rows").get<Eigen::Index>();
    const auto cols = c.header.at("cols").get<Eigen::Index>();
    if (c.data.size() != static_cast<std::size_t>(rows) * cols * 2)
        throw DataError("complex grid blob size mismatch: " + path.string());
    Eigen::MatrixXcd grid(rows, cols);
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index col = 0; col < cols; ++col) {
            grid(r, col) = {c.data[at], c.data[at + 1]};
            at += 2;
        }
    PixelGrid pixel_grid;
    const auto lat = c.header.at("lateral_m").get<std::vector<double>>();
    const auto dep = c.header.at("depth_m").get<std::vector<double>>();
    pixel_grid.lateral = Eigen::Map<const Eigen::VectorXd>(lat.data(), lat.size());
    pixel_grid.depth = Eigen::Map<const Eigen::VectorXd>(dep.data(), dep.size());
    return {std::move(grid), std::move(pixel_grid)};
}

void run_beamform(const RunConfig& config, const std::string& method, const std::string& split) {
    config.validate();
    const DatasetManifest manifest = load_manifest(manifest_path(config));
    const PixelGrid grid = test_grid(config);

    std::optional<nn::Regressor<float>> regressor;
    if (method == "dnn" || method == "dadnn") {
        const auto ckpt = checkpoint_link(config, method == "dnn" ? TrainMode::baseline
                                                                  : TrainMode::da);
        if (!std::filesystem::exists(ckpt))
            throw DataError("missing checkpoint for method '" + method + "': " + ckpt.string());
        regressor = load_regressor(ckpt);
    }

    bool any = false;
    for (const auto& entry : manifest.frames) {
        if (entry.split != split) continue;
        any = true;
        const FocusedTensor tensor = focused_tensor_for(config, entry, grid);
        const Eigen::MatrixXcd img =
            beamform_tensor(config, tensor, method, regressor ? &*regressor : nullptr);
        const auto dir = config.output_root / "beamformed" / method;
        save_complex_grid(dir / (entry.id + ".cgrid"), img, grid,
                          {{"method", method}, {"frame", entry.id}, {"domain", to_string(entry.domain)}});
        const BModeImage bmode = envelope_logcompress(img, grid, config.pipeline.dynamic_range_db);
        save_bmode(dir / (entry.id + ".bmode"), bmode);
        write_pgm(dir / (entry.id + ".pgm"), bmode_to_gray(bmode));
    }
    if (!any) throw DataError("beamform: no frames in split '" + split + "'");
}

EvaluationOutcome run_evaluate(const RunConfig& config) {
    config.validate();
    const DatasetManifest manifest = load_manifest(manifest_path(config));
    const auto rois = load_roi_manifest(roi_path(config));
    const auto beamformed_root = config.output_root / "beamformed";
    if (!std::filesystem::exists(beamformed_root))
        throw DataError("evaluate: no beamformed outputs under " + beamformed_root.string());

    std::vector<std::string> methods;
    for (const auto& dir : std::filesystem::directory_iterator(beamformed_root))
        if (dir.is_directory()) methods.push_back(dir.path().filename().string());
    std::sort(methods.begin(), methods.end());
    if (methods.empty()) throw DataError("evaluate: no beamformed outputs");

    EvaluationOutcome outcome;
    const char* domains[] = {"source", "target"};
    for (const std::string& method : methods) {
        for (const char* domain_name : domains) {
            const Domain domain = domain_from_string(domain_name);
            std::vector<FrameMetrics> metrics;
            for (const auto* entry : manifest.select("test", domain)) {
                const auto grid_path = beamformed_root / method / (entry->id + ".cgrid");
                if (!std::filesystem::exists(grid_path)) continue;
                auto it = rois.find(entry->id);
                if (it == rois.end())
                    throw DataError("evaluate: no roi for beamformed frame " + entry->id);
                const auto [img, grid] = load_complex_grid(grid_path);
                FrameMetrics fm;
                fm.frame_id = entry->id;
                const Eigen::MatrixXd envelope = img.cwiseAbs();
                fm.cnr = cnr_db(envelope, grid, it->second);
                fm.cr = cr_db(envelope, grid, it->second);
                metrics.push_back(fm);
            }
            if (!metrics.empty())
                outcome.stats[method][domain_name] = evaluate_method(method, metrics);
        }
    }
    if (outcome.stats.empty()) throw DataError("evaluate: no overlapping frames and outputs");

    const auto eval_dir = config.output_root / "eval";
    for (const char* domain_name : domains) {
        std::vector<MethodStats> table;
        for (const auto& [method, by_domain] : outcome.stats) {
            auto it = by_domain.find(domain_name);
            if (it != by_domain.end()) table.push_back(it->second);
        }
        if (!table.empty())
            write_stats_table(eval_dir / ("stats_" + std::string(domain_name) + "_test.tsv"),
                              table);
    }

    // Side-by-side montage per test frame with metric annotations.
    for (const auto& entry : manifest.frames) {
        if (entry.split != "test") continue;
        std::vector<MontagePanel> panels;
        for (const std::string& method : methods) {
            const auto grid_path = beamformed_root / method / (entry.id + ".cgrid");
            if (!std::filesystem::exists(grid_path)) continue;
            const auto [img, grid] = load_complex_grid(grid_path);
            const BModeImage bmode =
                envelope_logcompress(img, grid, config.pipeline.dynamic_range_db);
            const auto it = rois.find(entry.id);
            char caption[128];
            if (it != rois.end()) {
                const Eigen::MatrixXd envelope = img.cwiseAbs();
                std::snprintf(caption, sizeof(caption), "%s CNR %.2f CR %.2f", method.c_str(),
                              cnr_db(envelope, grid, it->second), cr_db(envelope, grid, it->second));
            } else {
                std::snprintf(caption, sizeof(caption), "%s", method.c_str());
            }
            panels.push_back({bmode_to_gray(bmode), caption});
        }
        if (!panels.empty()) write_pgm(eval_dir / ("montage_" + entry.id + ".pgm"), montage(panels));
    }
    return outcome;
}

} // namespace dabf
