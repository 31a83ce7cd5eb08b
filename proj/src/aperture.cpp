#include "dabf/aperture.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "dabf/container_io.hpp"
#include "dabf/errors.hpp"
#include "dabf/fft_utils.hpp"
#include "dabf/rng.hpp"

namespace dabf {

void PixelGrid::validate() const {
    if (lateral.size() == 0 || depth.size() == 0) throw ConfigError("empty pixel grid");
    for (Eigen::Index i = 1; i < lateral.size(); ++i)
        if (lateral[i] <= lateral[i - 1]) throw ConfigError("grid lateral axis not strictly increasing");
    for (Eigen::Index i = 1; i < depth.size(); ++i)
        if (depth[i] <= depth[i - 1]) throw ConfigError("grid depth axis not strictly increasing");
}

PixelGrid make_band_grid(const ArrayConfig& config, double depth_center, double depth_halfwidth,
                         double lateral_halfwidth) {
    const double dz = config.sound_speed / (2.0 * config.sampling_frequency);
    const int nz = static_cast<int>(std::floor(2.0 * depth_halfwidth / dz)) + 1;
    const int nx = static_cast<int>(std::floor(2.0 * lateral_halfwidth / config.pitch)) + 1;
    PixelGrid grid;
    grid.depth.resize(nz);
    grid.lateral.resize(nx);
    const double z0 = depth_center - 0.5 * (nz - 1) * dz;
    for (int i = 0; i < nz; ++i) grid.depth[i] = z0 + i * dz;
    const double x0 = -0.5 * (nx - 1) * config.pitch;
    for (int j = 0; j < nx; ++j) grid.lateral[j] = x0 + j * config.pitch;
    grid.validate();
    return grid;
}

AnalyticFrame analytic_signal(const ChannelFrame& frame) {
    if (frame.num_samples() < 16)
        throw DataError("analytic_signal needs at least 16 time samples");
    AnalyticFrame out;
    out.t0 = frame.t0;
    out.config = frame.config;
    out.domain_tag = frame.domain_tag;
    out.samples.resize(frame.samples.rows(), frame.samples.cols());
    for (Eigen::Index n = 0; n < frame.samples.cols(); ++n)
        out.samples.col(n) = fft::analytic_signal(frame.samples.col(n));
    return out;
}

FocusedTensor focus(const AnalyticFrame& frame, const PixelGrid& grid, double transmit_offset) {
    grid.validate();
    const ArrayConfig& cfg = frame.config;
    const double fs = cfg.sampling_frequency;
    const double c = cfg.sound_speed;
    const int num_samples = static_cast<int>(frame.samples.rows());
    const int E = cfg.num_elements;
    const int L = grid.num_lateral();
    const int D = grid.num_depths();

    FocusedTensor tensor;
    tensor.grid = grid;
    tensor.config = cfg;
    tensor.domain_tag = frame.domain_tag;
    tensor.values.assign(static_cast<std::size_t>(D) * L * E, {0.0, 0.0});

    // Phase-corrected linear interpolation: the carrier advance per sample is
    // removed before blending and restored at the fractional offset, so a
    // pure carrier interpolates with exact phase.
    const double carrier_step = 2.0 * M_PI * cfg.center_frequency / fs;
    const std::complex<double> back_rotate{std::cos(carrier_step), -std::sin(carrier_step)};

    std::vector<std::pair<int, int>> out_of_bounds;
    for (int d = 0; d < D; ++d) {
        const double z = grid.depth[d];
        for (int l = 0; l < L; ++l) {
            const double x = grid.lateral[l];
            bool bad = false;
            for (int e = 0; e < E; ++e) {
                const double tau =
                    (z + std::hypot(x - cfg.element_x(e), z)) / c + transmit_offset;
                const double u = (tau - frame.t0) * fs;
                const int i0 = static_cast<int>(std::floor(u));
                if (i0 < 0 || i0 + 1 >= num_samples) {
                    bad = true;
                    continue;
                }
                const double frac = u - i0;
                const std::complex<double> blended = (1.0 - frac) * frame.samples(i0, e) +
                                                     frac * frame.samples(i0 + 1, e) * back_rotate;
                const std::complex<double> fwd{std::cos(carrier_step * frac),
                                               std::sin(carrier_step * frac)};
                tensor.at(d, l, e) = blended * fwd;
            }
            if (bad) out_of_bounds.emplace_back(d, l);
        }
    }
    if (!out_of_bounds.empty()) {
        std::ostringstream msg;
        msg << "focus: " << out_of_bounds.size() << " pixel(s) outside the frame time support;"
            << " first offenders (depth,lateral index):";
        for (std::size_t i = 0; i < std::min<std::size_t>(out_of_bounds.size(), 5); ++i)
            msg << " (" << out_of_bounds[i].first << "," << out_of_bounds[i].second << ")";
        throw DataError(msg.str());
    }
    return tensor;
}

std::int64_t WindowLabelMap::count(WindowLabel l) const {
    return std::count(labels.begin(), labels.end(), l);
}

WindowLabelMap label_windows(const PixelGrid& grid, const PhantomSpec& phantom, int kernel_depths) {
    if (kernel_depths < 1 || kernel_depths > grid.num_depths())
        throw ConfigError("kernel_depths must be in [1, grid depth count]");
    WindowLabelMap map;
    map.kernel_depths = kernel_depths;
    map.num_window_rows = grid.num_depths() - kernel_depths + 1;
    map.num_lateral = grid.num_lateral();
    map.labels.resize(static_cast<std::size_t>(map.num_window_rows) * map.num_lateral);
    for (int i = 0; i < map.num_window_rows; ++i) {
        for (int j = 0; j < map.num_lateral; ++j) {
            int inside = 0;
            for (int k = 0; k < kernel_depths; ++k)
                if (phantom.inside_cyst(grid.lateral[j], grid.depth[i + k])) ++inside;
            WindowLabel label = WindowLabel::excluded;
            if (inside == kernel_depths)
                label = WindowLabel::reject;
            else if (inside == 0)
                label = WindowLabel::accept;
            map.labels[static_cast<std::size_t>(i) * map.num_lateral + j] = label;
        }
    }
    return map;
}

int sample_dim(int kernel_depths, int num_elements) { return 2 * kernel_depths * num_elements; }

Eigen::VectorXd stack_window(const FocusedTensor& tensor, int window_row, int lateral,
                             int kernel_depths) {
    const int E = tensor.num_elements();
    const int ke = kernel_depths * E;
    Eigen::VectorXd x(2 * ke);
    for (int k = 0; k < kernel_depths; ++k) {
        for (int e = 0; e < E; ++e) {
            const auto v = tensor.at(window_row + k, lateral, e);
            x[k * E + e] = v.real();
            x[ke + k * E + e] = v.imag();
        }
    }
    return x;
}

void unstack_into(const Eigen::Ref<const Eigen::VectorXd>& v, int kernel_depths, int num_elements,
                  std::vector<std::complex<double>>& block) {
    const int ke = kernel_depths * num_elements;
    if (v.size() != 2 * ke) throw DataError("unstack: wrong vector length");
    block.resize(ke);
    for (int i = 0; i < ke; ++i) block[i] = {v[i], v[ke + i]};
}

Eigen::MatrixXd extract_windows(const FocusedTensor& tensor, int kernel_depths) {
    const int rows = tensor.num_depths() - kernel_depths + 1;
    if (rows < 1) throw ConfigError("kernel does not fit within the tensor depth range");
    const int L = tensor.num_lateral();
    const int d = sample_dim(kernel_depths, tensor.num_elements());
    Eigen::MatrixXd out(d, static_cast<Eigen::Index>(rows) * L);
    for (int l = 0; l < L; ++l)
        for (int i = 0; i < rows; ++i)
            out.col(static_cast<Eigen::Index>(l) * rows + i) = stack_window(tensor, i, l, kernel_depths);
    return out;
}

FocusedTensor reconstruct(const Eigen::Ref<const Eigen::MatrixXd>& outputs, const PixelGrid& grid,
                          const ArrayConfig& config, Domain domain_tag, int kernel_depths) {
    const int D = grid.num_depths();
    const int L = grid.num_lateral();
    const int E = config.num_elements;
    const int rows = D - kernel_depths + 1;
    if (rows < 1) throw ConfigError("kernel does not fit within the tensor depth range");
    const int d = sample_dim(kernel_depths, E);
    if (outputs.rows() != d || outputs.cols() != static_cast<Eigen::Index>(rows) * L)
        throw DataError("reconstruct: outputs missing window positions (expected " +
                        std::to_string(static_cast<long long>(rows) * L) + " columns of length " +
                        std::to_string(d) + ")");

    FocusedTensor tensor;
    tensor.grid = grid;
    tensor.config = config;
    tensor.domain_tag = domain_tag;
    const std::size_t cells = static_cast<std::size_t>(D) * L * E;
    tensor.values.assign(cells, {0.0, 0.0});

    // Mean via first-contribution + delta sums: overlapping identical window
    // outputs reproduce the input cell bit-exactly.
    std::vector<std::complex<double>> first(cells, {0.0, 0.0});
    std::vector<std::complex<double>> delta(cells, {0.0, 0.0});
    std::vector<std::int32_t> count(cells, 0);
    const int ke = kernel_depths * E;
    for (int l = 0; l < L; ++l) {
        for (int i = 0; i < rows; ++i) {
            const auto col = outputs.col(static_cast<Eigen::Index>(l) * rows + i);
            for (int k = 0; k < kernel_depths; ++k) {
                for (int e = 0; e < E; ++e) {
                    const std::complex<double> v{col[k * E + e], col[ke + k * E + e]};
                    const std::size_t cell =
                        (static_cast<std::size_t>(i + k) * L + l) * E + e;
                    if (count[cell] == 0)
                        first[cell] = v;
                    else
                        delta[cell] += v - first[cell];
                    ++count[cell];
                }
            }
        }
    }
    for (std::size_t cell = 0; cell < cells; ++cell)
        tensor.values[cell] = first[cell] + delta[cell] / static_cast<double>(count[cell]);
    return tensor;
}

double normalize_sample(Eigen::VectorXd& x) {
    const double rms = std::sqrt(x.squaredNorm() / x.size());
    if (rms < 1e-30) return 1.0;
    x /= rms;
    return rms;
}

namespace {

std::vector<std::pair<int, int>> windows_with_label(const WindowLabelMap& map, WindowLabel want) {
    std::vector<std::pair<int, int>> out;
    for (int l = 0; l < map.num_lateral; ++l)
        for (int i = 0; i < map.num_window_rows; ++i)
            if (map.at(i, l) == want) out.emplace_back(i, l);
    return out;
}

Eigen::VectorXf normalized_window(const FocusedTensor& tensor, int i, int l, int kernel_depths) {
    Eigen::VectorXd x = stack_window(tensor, i, l, kernel_depths);
    normalize_sample(x);
    return x.cast<float>();
}

} // namespace

SampleDataset extract_balanced_pairs(const FocusedTensor& tensor, const WindowLabelMap& labels,
                                     std::int64_t num_pairs, std::uint64_t seed) {
    if (num_pairs % 2 != 0) throw ConfigError("num_pairs must be even for a balanced dataset");
    const std::int64_t per_class = num_pairs / 2;
    auto accepts = windows_with_label(labels, WindowLabel::accept);
    auto rejects = windows_with_label(labels, WindowLabel::reject);
    if (static_cast<std::int64_t>(accepts.size()) < per_class ||
        static_cast<std::int64_t>(rejects.size()) < per_class)
        throw DataError("insufficient eligible pixels: need " + std::to_string(per_class) +
                        " per class, have " + std::to_string(accepts.size()) + " accept / " +
                        std::to_string(rejects.size()) + " reject");
    Rng acc_rng(derive_seed(seed, "accept_subsample"));
    Rng rej_rng(derive_seed(seed, "reject_subsample"));
    acc_rng.shuffle(accepts);
    rej_rng.shuffle(rejects);

    const int K = labels.kernel_depths;
    const int d = sample_dim(K, tensor.num_elements());
    SampleDataset ds;
    ds.d = d;
    ds.kernel_depths = K;
    ds.labeled = true;
    ds.domain = tensor.domain_tag;
    ds.seed = seed;
    ds.x.resize(d, num_pairs);
    ds.y.resize(d, num_pairs);
    for (std::int64_t s = 0; s < per_class; ++s) {
        const auto [i, l] = accepts[static_cast<std::size_t>(s)];
        ds.x.col(s) = normalized_window(tensor, i, l, K);
        ds.y.col(s) = ds.x.col(s); // accept: output equals input
    }
    for (std::int64_t s = 0; s < per_class; ++s) {
        const auto [i, l] = rejects[static_cast<std::size_t>(s)];
        ds.x.col(per_class + s) = normalized_window(tensor, i, l, K);
        ds.y.col(per_class + s).setZero(); // reject: output is the zero vector
    }
    ds.accept_count = per_class;
    ds.reject_count = per_class;
    return ds;
}

SampleDataset extract_unlabeled(const FocusedTensor& tensor, int kernel_depths,
                                std::int64_t num_samples, std::uint64_t seed) {
    const int rows = tensor.num_depths() - kernel_depths + 1;
    if (rows < 1) throw ConfigError("kernel does not fit within the tensor depth range");
    std::vector<std::pair<int, int>> windows;
    windows.reserve(static_cast<std::size_t>(rows) * tensor.num_lateral());
    for (int l = 0; l < tensor.num_lateral(); ++l)
        for (int i = 0; i < rows; ++i) windows.emplace_back(i, l);
    if (static_cast<std::int64_t>(windows.size()) < num_samples)
        throw DataError("insufficient eligible pixels: need " + std::to_string(num_samples) +
                        ", have " + std::to_string(windows.size()));
    Rng rng(derive_seed(seed, "unlabeled_subsample"));
    rng.shuffle(windows);

    const int d = sample_dim(kernel_depths, tensor.num_elements());
    SampleDataset ds;
    ds.d = d;
    ds.kernel_depths = kernel_depths;
    ds.labeled = false;
    ds.domain = tensor.domain_tag;
    ds.seed = seed;
    ds.x.resize(d, num_samples);
    for (std::int64_t s = 0; s < num_samples; ++s) {
        const auto [i, l] = windows[static_cast<std::size_t>(s)];
        ds.x.col(s) = normalized_window(tensor, i, l, kernel_depths);
    }
    return ds;
}

SampleDataset concat_datasets(const std::vector<SampleDataset>& parts) {
    if (parts.empty()) throw DataError("concat_datasets: no parts");
    SampleDataset out = parts.front();
    std::int64_t total = 0;
    for (const auto& p : parts) {
        if (p.d != out.d || p.kernel_depths != out.kernel_depths || p.labeled != out.labeled ||
            p.domain != out.domain)
            throw DataError("concat_datasets: mismatched dataset shapes");
        total += p.size();
    }
    out.x.resize(out.d, total);
    if (out.labeled) out.y.resize(out.d, total);
    out.accept_count = out.reject_count = 0;
    std::int64_t at = 0;
    for (const auto& p : parts) {
        out.x.middleCols(at, p.size()) = p.x;
        if (out.labeled) out.y.middleCols(at, p.size()) = p.y;
        out.accept_count += p.accept_count;
        out.reject_count += p.reject_count;
        at += p.size();
    }
    return out;
}

void save_dataset(const std::filesystem::path& path, const SampleDataset& ds) {
    const std::int64_t n = ds.size();
    const int row_len = ds.labeled ? 2 * ds.d : ds.d;
    std::vector<float> blob(static_cast<std::size_t>(n) * row_len);
    for (std::int64_t s = 0; s < n; ++s) {
        float* row = blob.data() + static_cast<std::size_t>(s) * row_len;
        for (int i = 0; i < ds.d; ++i) row[i] = ds.x(i, s);
        if (ds.labeled)
            for (int i = 0; i < ds.d; ++i) row[ds.d + i] = ds.y(i, s);
    }
    nlohmann::json header = {{"format", "dabf-dataset/1"},
                             {"d", ds.d},
                             {"kernel_depths", ds.kernel_depths},
                             {"labeled", ds.labeled},
                             {"domain", to_string(ds.domain)},
                             {"num_samples", n},
                             {"accept_count", ds.accept_count},
                             {"reject_count", ds.reject_count},
                             {"normalization", ds.normalization},
                             {"seed", ds.seed}};
    io::write_container(path, header, blob.data(), blob.size());
    io::write_json_file(path.string() + ".json", header); // sidecar
}

SampleDataset load_dataset(const std::filesystem::path& path) {
    const io::Container c = io::read_container(path);
    if (c.header.value("format", "") != "dabf-dataset/1")
        throw DataError("not a dataset container: " + path.string());
    SampleDataset ds;
    ds.d = c.header.at("d").get<int>();
    ds.kernel_depths = c.header.at("kernel_depths").get<int>();
    ds.labeled = c.header.at("labeled").get<bool>();
    ds.domain = domain_from_string(c.header.at("domain").get<std::string>());
    ds.accept_count = c.header.at("accept_count").get<std::int64_t>();
    ds.reject_count = c.header.at("reject_count").get<std::int64_t>();
    ds.normalization = c.header.at("normalization").get<std::string>();
    ds.seed = c.header.at("seed").get<std::uint64_t>();
    const std::int64_t n = c.header.at("num_samples").get<std::int64_t>();
    const int row_len = ds.labeled ? 2 * ds.d : ds.d;
    if (c.data.size() != static_cast<std::size_t>(n) * row_len)
        throw DataError("dataset blob size mismatch: " + path.string());
    ds.x.resize(ds.d, n);
    if (ds.labeled) ds.y.resize(ds.d, n);
    for (std::int64_t s = 0; s < n; ++s) {
        const float* row = c.data.data() + static_cast<std::size_t>(s) * row_len;
        for (int i = 0; i < ds.d; ++i) ds.x(i, s) = row[i];
        if (ds.labeled)
            for (int i = 0; i < ds.d; ++i) ds.y(i, s) = row[ds.d + i];
    }
    return ds;
}

} // namespace dabf
