#include "dabf/acoustics.hpp"

#include <algorithm>
#include <cmath>

#include "dabf/container_io.hpp"
#include "dabf/errors.hpp"
#include "dabf/fft_utils.hpp"
#include "dabf/rng.hpp"

namespace dabf {

std::string to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

Domain domain_from_string(const std::string& s) {
    if (s == "source") return Domain::source;
    if (s == "target") return Domain::target;
    throw DataError("unknown domain tag: " + s);
}

void ArrayConfig::validate() const {
    if (num_elements < 2) throw ConfigError("num_elements must be >= 2");
    if (pitch <= 0 || center_frequency <= 0 || sampling_frequency <= 0 || sound_speed <= 0 ||
        transmit_focus_depth <= 0)
        throw ConfigError("array physical quantities must be strictly positive");
    if (sampling_frequency < 2.0 * center_frequency)
        throw ConfigError("sampling_frequency below Nyquist for the carrier");
}

void PhantomSpec::validate() const {
    if (cyst_diameter <= 0) throw ConfigError("cyst_diameter must be positive");
    if (scatterer_density < 0) throw ConfigError("scatterer_density must be nonnegative");
    if (field_extent.lateral_min >= field_extent.lateral_max ||
        field_extent.depth_min >= field_extent.depth_max)
        throw ConfigError("field_extent is empty");
    const double r = cyst_radius();
    const bool inside = cyst_lateral - r >= field_extent.lateral_min &&
                        cyst_lateral + r <= field_extent.lateral_max &&
                        cyst_depth - r >= field_extent.depth_min &&
                        cyst_depth + r <= field_extent.depth_max;
    if (!inside) throw ConfigError("cyst region lies outside field_extent");
}

ScattererField make_phantom(const PhantomSpec& spec) {
    spec.validate();
    const auto n = static_cast<std::size_t>(
        std::llround(spec.scatterer_density * spec.field_extent.area_mm2()));
    ScattererField field;
    field.extent = spec.field_extent;
    field.x.reserve(n);
    field.z.reserve(n);
    field.amplitude.reserve(n);
    Rng rng(spec.rng_seed);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = rng.uniform(spec.field_extent.lateral_min, spec.field_extent.lateral_max);
        const double z = rng.uniform(spec.field_extent.depth_min, spec.field_extent.depth_max);
        const double a = rng.normal();
        field.x.push_back(x);
        field.z.push_back(z);
        field.amplitude.push_back(spec.inside_cyst(x, z) ? 0.0 : a);
    }
    return field;
}

double transmit_path(const ArrayConfig& config, double x, double z) {
    const double zf = config.transmit_focus_depth;
    const double dist = std::hypot(x, z - zf);
    return (z >= zf) ? zf + dist : zf - dist;
}

namespace {

// Required receive-time span for echoes from anywhere inside the extent,
// scanned over a coarse grid of field positions and all elements. Padded by
// the pulse support plus a safety margin for the grid granularity.
std::pair<double, double> required_time_span(const Extent& extent, const ArrayConfig& config,
                                             const PulseSpec& pulse) {
    const int grid = 48;
    double tmin = std::numeric_limits<double>::infinity();
    double tmax = -std::numeric_limits<double>::infinity();
    const double c = config.sound_speed;
    for (int ix = 0; ix <= grid; ++ix) {
        const double x = extent.lateral_min +
                         (extent.lateral_max - extent.lateral_min) * ix / grid;
        for (int iz = 0; iz <= grid; ++iz) {
            const double z = extent.depth_min + (extent.depth_max - extent.depth_min) * iz / grid;
            const double dtx = transmit_path(config, x, z);
            for (int n = 0; n < config.num_elements; ++n) {
                const double drx = std::hypot(x - config.element_x(n), z);
                const double tau = (dtx + drx) / c;
                tmin = std::min(tmin, tau);
                tmax = std::max(tmax, tau);
            }
        }
    }
    const double cell = std::hypot(extent.lateral_max - extent.lateral_min,
                                   extent.depth_max - extent.depth_min) / grid;
    const double pad = pulse.support_halfwidth(config.center_frequency) + 2.0 * cell / c;
    return {tmin - pad, tmax + pad};
}

} // namespace

ChannelFrame simulate_channel_data(const ScattererField& field, const ArrayConfig& config,
                                   const PulseSpec& pulse,
                                   const std::optional<TimeWindow>& window) {
    config.validate();
    const double fs = config.sampling_frequency;
    const double fc = config.center_frequency;
    const double c = config.sound_speed;

    const auto [t_lo, t_hi] = required_time_span(field.extent, config, pulse);
    double t0;
    int num_samples;
    if (window) {
        t0 = window->t_start;
        num_samples = window->num_samples;
        const double t_end = t0 + (num_samples - 1) / fs;
        if (t0 > t_lo || t_end < t_hi)
            throw ConfigError("time window too short to contain echoes from field_extent: need [" +
                              std::to_string(t_lo) + ", " + std::to_string(t_hi) + "] s, got [" +
                              std::to_string(t0) + ", " + std::to_string(t_end) + "] s");
    } else {
        t0 = t_lo;
        num_samples = static_cast<int>(std::ceil((t_hi - t_lo) * fs)) + 1;
        if (num_samples % 2 != 0) ++num_samples;
    }

    ChannelFrame frame;
    frame.samples = Eigen::MatrixXd::Zero(num_samples, config.num_elements);
    frame.t0 = t0;
    frame.config = config;
    frame.domain_tag = Domain::source;

    const double halfwidth = pulse.support_halfwidth(fc);
    for (std::size_t k = 0; k < field.size(); ++k) {
        const double a = field.amplitude[k];
        if (a == 0.0) continue;
        const double x = field.x[k], z = field.z[k];
        const double dtx = transmit_path(config, x, z);
        const double w = a / std::hypot(x, z); // 1/r decay
        for (int n = 0; n < config.num_elements; ++n) {
            const double tau = (dtx + std::hypot(x - config.element_x(n), z)) / c;
            const int i_lo = std::max(0, static_cast<int>(std::ceil((tau - halfwidth - t0) * fs)));
            const int i_hi = std::min(num_samples - 1,
                                      static_cast<int>(std::floor((tau + halfwidth - t0) * fs)));
            for (int i = i_lo; i <= i_hi; ++i)
                frame.samples(i, n) += w * pulse.value(t0 + i / fs - tau, fc);
        }
    }
    return frame;
}

ChannelFrame add_noise(const ChannelFrame& frame, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0) return frame;
    const double signal_power = frame.samples.squaredNorm() / frame.samples.size();
    if (signal_power <= 0.0)
        throw DataError("add_noise: all-zero frame has undefined SNR");
    const double noise_std = std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
    ChannelFrame out = frame;
    Rng rng(seed);
    for (Eigen::Index col = 0; col < out.samples.cols(); ++col)
        for (Eigen::Index row = 0; row < out.samples.rows(); ++row)
            out.samples(row, col) += noise_std * rng.normal();
    return out;
}

namespace {

// Correlated screen over element index: white Gaussian smoothed with a
// Gaussian kernel of the given correlation length, rescaled so the empirical
// rms equals `rms` exactly.
Eigen::VectorXd correlated_screen(int num_elements, double correlation, double rms, Rng& rng) {
    Eigen::VectorXd white(num_elements);
    for (int i = 0; i < num_elements; ++i) white[i] = rng.normal();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(num_elements);
    const int reach = std::max(1, static_cast<int>(std::ceil(3.0 * correlation)));
    for (int i = 0; i < num_elements; ++i) {
        for (int j = -reach; j <= reach; ++j) {
            const int src = i + j;
            if (src < 0 || src >= num_elements) continue;
            const double u = correlation > 0 ? j / correlation : (j == 0 ? 0.0 : 1e9);
            out[i] += std::exp(-0.5 * u * u) * white[src];
        }
    }
    const double emp = std::sqrt(out.squaredNorm() / num_elements);
    if (emp > 0) out *= rms / emp;
    return out;
}

} // namespace

ChannelFrame apply_domain_shift(const ChannelFrame& frame, const ShiftSpec& shift) {
    if (frame.domain_tag != Domain::source)
        throw DataError("apply_domain_shift expects a source-domain frame");

    ChannelFrame out = frame;
    out.domain_tag = Domain::target;
    const bool has_clutter = shift.clutter_to_signal_db.has_value();
    if (shift.phase_screen_rms == 0.0 && shift.gain_ripple_db == 0.0 && !has_clutter)
        return out; // exact identity

    const int elements = frame.config.num_elements;
    const double fs = frame.config.sampling_frequency;
    const double signal_power = frame.samples.squaredNorm() / frame.samples.size();

    if (shift.phase_screen_rms > 0.0) {
        Rng rng(derive_seed(shift.rng_seed, "phase_screen"));
        const Eigen::VectorXd delays = correlated_screen(elements, shift.phase_screen_correlation,
                                                         shift.phase_screen_rms, rng);
        for (int n = 0; n < elements; ++n)
            out.samples.col(n) = fft::fractional_delay(out.samples.col(n), delays[n], fs);
    }

    if (shift.gain_ripple_db > 0.0) {
        Rng rng(derive_seed(shift.rng_seed, "gain_ripple"));
        for (int n = 0; n < elements; ++n) {
            const double db = rng.uniform(-shift.gain_ripple_db, shift.gain_ripple_db);
            out.samples.col(n) *= std::pow(10.0, db / 20.0);
        }
    }

    if (has_clutter && signal_power > 0.0) {
        Rng rng(derive_seed(shift.rng_seed, "clutter"));
        const Eigen::Index rows = out.samples.rows();
        Eigen::MatrixXd white(rows, elements);
        for (int n = 0; n < elements; ++n)
            for (Eigen::Index i = 0; i < rows; ++i) white(i, n) = rng.normal();
        // Spatial low-pass across elements; same kernel shape as the screen.
        const double corr = shift.phase_screen_correlation;
        const int reach = std::max(1, static_cast<int>(std::ceil(3.0 * std::max(corr, 1.0))));
        Eigen::MatrixXd clutter = Eigen::MatrixXd::Zero(rows, elements);
        for (int n = 0; n < elements; ++n) {
            for (int j = -reach; j <= reach; ++j) {
                const int src = n + j;
                if (src < 0 || src >= elements) continue;
                const double u = corr > 0 ? j / corr : (j == 0 ? 0.0 : 1e9);
                clutter.col(n) += std::exp(-0.5 * u * u) * white.col(src);
            }
        }
        const double clutter_power = clutter.squaredNorm() / clutter.size();
        const double target_power =
            signal_power * std::pow(10.0, *shift.clutter_to_signal_db / 10.0);
        if (clutter_power > 0) out.samples += std::sqrt(target_power / clutter_power) * clutter;
    }
    return out;
}

void save_frame(const std::filesystem::path& path, const ChannelFrame& frame,
                const nlohmann::json& extra) {
    nlohmann::json header = {
        {"format", "dabf-frame/1"},
        {"num_samples", frame.num_samples()},
        {"num_elements", frame.config.num_elements},
        {"t0", frame.t0},
        {"domain_tag", to_string(frame.domain_tag)},
        {"array",
         {{"num_elements", frame.config.num_elements},
          {"pitch", frame.config.pitch},
          {"center_frequency", frame.config.center_frequency},
          {"sampling_frequency", frame.config.sampling_frequency},
          {"sound_speed", frame.config.sound_speed},
          {"transmit_focus_depth", frame.config.transmit_focus_depth}}},
    };
    if (!extra.is_null()) header["meta"] = extra;
    // time-major: sample (t, e) at index t * E + e
    const int rows = frame.num_samples(), cols = frame.config.num_elements;
    std::vector<float> blob(static_cast<std::size_t>(rows) * cols);
    for (int t = 0; t < rows; ++t)
        for (int e = 0; e < cols; ++e)
            blob[static_cast<std::size_t>(t) * cols + e] = static_cast<float>(frame.samples(t, e));
    io::write_container(path, header, blob.data(), blob.size());
}

ChannelFrame load_frame(const std::filesystem::path& path) {
    const io::Container c = io::read_container(path);
    if (c.header.value("format", "") != "dabf-frame/1")
        throw DataError("not a channel-frame container: " + path.string());
    ChannelFrame frame;
    const auto& arr = c.header.at("array");
    frame.config.num_elements = arr.at("num_elements").get<int>();
    frame.config.pitch = arr.at("pitch").get<double>();
    frame.config.center_frequency = arr.at("center_frequency").get<double>();
    frame.config.sampling_frequency = arr.at("sampling_frequency").get<double>();
    frame.config.sound_speed = arr.at("sound_speed").get<double>();
    frame.config.transmit_focus_depth = arr.at("transmit_focus_depth").get<double>();
    frame.t0 = c.header.at("t0").get<double>();
    frame.domain_tag = domain_from_string(c.header.at("domain_tag").get<std::string>());
    const int rows = c.header.at("num_samples").get<int>();
    const int cols = frame.config.num_elements;
    if (c.data.size() != static_cast<std::size_t>(rows) * cols)
        throw DataError("frame blob size mismatch: " + path.string());
    frame.samples.resize(rows, cols);
    for (int t = 0; t < rows; ++t)
        for (int e = 0; e < cols; ++e)
            frame.samples(t, e) = c.data[static_cast<std::size_t>(t) * cols + e];
    return frame;
}

} // namespace dabf
