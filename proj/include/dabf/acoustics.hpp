#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace dabf {

enum class Domain { source, target };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

// Linear-array geometry and sampling. Elements are centered on the lateral
// axis; element n sits at x = (n - (E-1)/2) * pitch, z = 0.
struct ArrayConfig {
    int num_elements = 65;
    double pitch = 298e-6;             // m
    double center_frequency = 5.208e6; // Hz
    double sampling_frequency = 20.832e6;
    double sound_speed = 1540.0;       // m/s
    double transmit_focus_depth = 70e-3;

    double element_x(int n) const {
        return (n - 0.5 * (num_elements - 1)) * pitch;
    }
    double wavelength() const { return sound_speed / center_frequency; }
    void validate() const; // throws ConfigError on violated invariants
};

// Gaussian-windowed sinusoid at the array center frequency. The fractional
// bandwidth is the two-sided -6 dB width of the pulse spectrum envelope.
struct PulseSpec {
    double fractional_bandwidth = 0.6;
    double amplitude = 1.0;

    double sigma_t(double fc) const {
        return std::sqrt(std::log(2.0) / 2.0) / (M_PI * 0.5 * fractional_bandwidth * fc);
    }
    double support_halfwidth(double fc) const { return 4.0 * sigma_t(fc); }
    double value(double t, double fc) const {
        const double s = sigma_t(fc);
        return amplitude * std::exp(-0.5 * t * t / (s * s)) * std::cos(2.0 * M_PI * fc * t);
    }
};

struct Extent {
    double lateral_min = 0, lateral_max = 0;
    double depth_min = 0, depth_max = 0;
    double area_mm2() const {
        return (lateral_max - lateral_min) * (depth_max - depth_min) * 1e6;
    }
};

struct PhantomSpec {
    double cyst_lateral = 0.0;  // m
    double cyst_depth = 70e-3;  // m
    double cyst_diameter = 5e-3;
    double scatterer_density = 20.0; // per mm^2
    Extent field_extent{-10e-3, 10e-3, 60e-3, 80e-3};
    std::uint64_t rng_seed = 0;

    double cyst_radius() const { return 0.5 * cyst_diameter; }
    bool inside_cyst(double x, double z) const {
        const double dx = x - cyst_lateral, dz = z - cyst_depth;
        return dx * dx + dz * dz < cyst_radius() * cyst_radius();
    }
    void validate() const;
};

struct ScattererField {
    std::vector<double> x, z, amplitude;
    Extent extent; // carried along for time-window computation
    std::size_t size() const { return x.size(); }
};

struct ChannelFrame {
    Eigen::MatrixXd samples; // [num_time_samples x num_elements]
    double t0 = 0.0;         // time of first sample, s
    ArrayConfig config;
    Domain domain_tag = Domain::source;

    int num_samples() const { return static_cast<int>(samples.rows()); }
    double time_at(int i) const { return t0 + i / config.sampling_frequency; }
};

struct TimeWindow {
    double t_start = 0.0;
    int num_samples = 0;
};

// Deterministic synthetic proxy for the simulated-vs-real gap: a correlated
// per-element delay screen, per-element gain ripple and spatially-low-pass
// additive clutter. Identical (spec, frame) pairs produce identical output.
struct ShiftSpec {
    double phase_screen_rms = 30e-9;        // s
    double phase_screen_correlation = 8.0;  // elements
    std::optional<double> clutter_to_signal_db = -6.0; // nullopt disables clutter
    double gain_ripple_db = 3.0;
    std::uint64_t rng_seed = 0;
};

ScattererField make_phantom(const PhantomSpec& spec);

ChannelFrame simulate_channel_data(const ScattererField& field, const ArrayConfig& config,
                                   const PulseSpec& pulse,
                                   const std::optional<TimeWindow>& window = std::nullopt);

// Focused-transmit path length from the delay reference (wave leaves the
// array plane at t = 0) to a field point, using the virtual-source model:
// the wavefront converges to the focus and diverges past it.
double transmit_path(const ArrayConfig& config, double x, double z);

// snr_db = +inf returns the input unchanged.
ChannelFrame add_noise(const ChannelFrame& frame, double snr_db, std::uint64_t seed);

ChannelFrame apply_domain_shift(const ChannelFrame& frame, const ShiftSpec& shift);

// Persistence: binary container with a JSON header (config, t0, domain, seeds)
// and float32 samples in time-major order.
void save_frame(const std::filesystem::path& path, const ChannelFrame& frame,
                const nlohmann::json& extra = {});
ChannelFrame load_frame(const std::filesystem::path& path);

} // namespace dabf
