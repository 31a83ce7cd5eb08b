#include <doctest.h>

#include <complex>

#include "dabf/acoustics.hpp"
#include "dabf/errors.hpp"
#include "dabf/fft_utils.hpp"
#include "dabf/rng.hpp"

using namespace dabf;

namespace {

PhantomSpec default_phantom(std::uint64_t seed = 1) {
    PhantomSpec spec;
    spec.rng_seed = seed;
    return spec;
}

// Sub-sample arrival-time estimate: integer peak of the analytic envelope
// refined by the carrier phase at the peak.
double arrival_time(const Eigen::VectorXd& signal, double t0, double fs, double fc) {
    const Eigen::VectorXcd analytic = fft::analytic_signal(signal);
    int peak = 0;
    double best = -1;
    for (int i = 0; i < analytic.size(); ++i) {
        const double mag = std::abs(analytic[i]);
        if (mag > best) {
            best = mag;
            peak = i;
        }
    }
    // Phase of the analytic signal is 2 pi fc (t - tau) near the pulse center.
    const double phase = std::arg(analytic[peak]);
    return t0 + peak / fs - phase / (2.0 * M_PI * fc);
}

} // namespace

TEST_CASE("array config invariants") {
    ArrayConfig config;
    CHECK_NOTHROW(config.validate());
    config.num_elements = 1;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = ArrayConfig{};
    config.sampling_frequency = 1.9 * config.center_frequency;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config = ArrayConfig{};
    CHECK(config.element_x(32) == doctest::Approx(0.0));
    CHECK(config.element_x(0) == doctest::Approx(-32 * config.pitch));
}

TEST_CASE("make_phantom zeroes the cyst and is reproducible") {
    const PhantomSpec spec = default_phantom(77);
    const ScattererField field = make_phantom(spec);
    const auto expected =
        static_cast<std::size_t>(std::llround(spec.scatterer_density * spec.field_extent.area_mm2()));
    CHECK(field.size() == expected);
    for (std::size_t k = 0; k < field.size(); ++k) {
        const double dist = std::hypot(field.x[k] - spec.cyst_lateral, field.z[k] - spec.cyst_depth);
        if (field.amplitude[k] != 0.0) CHECK(dist >= spec.cyst_radius());
    }
    const ScattererField again = make_phantom(spec);
    CHECK(field.x == again.x);
    CHECK(field.z == again.z);
    CHECK(field.amplitude == again.amplitude);
}

TEST_CASE("make_phantom rejects a cyst outside the extent") {
    PhantomSpec spec = default_phantom();
    spec.cyst_lateral = 9.9e-3; // 5 mm cyst pokes out of the +-10 mm extent
    CHECK_THROWS_AS(make_phantom(spec), ConfigError);
}

TEST_CASE("zero scatterer density gives an all-zero frame") {
    PhantomSpec spec = default_phantom();
    spec.scatterer_density = 0.0;
    const ScattererField field = make_phantom(spec);
    CHECK(field.size() == 0);
    const ChannelFrame frame = simulate_channel_data(field, ArrayConfig{}, PulseSpec{});
    CHECK(frame.samples.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single scatterer at the focus arrives at the geometric two-way delay") {
    ArrayConfig config;
    ScattererField field;
    field.x = {0.0};
    field.z = {config.transmit_focus_depth};
    field.amplitude = {1.0};
    field.extent = {-1e-3, 1e-3, 69e-3, 71e-3};
    const ChannelFrame frame = simulate_channel_data(field, config, PulseSpec{});
    for (int n = 0; n < config.num_elements; n += 8) {
        const double expected =
            (70e-3 + std::hypot(config.element_x(n), 70e-3)) / config.sound_speed;
        const double measured = arrival_time(frame.samples.col(n), frame.t0, config.sampling_frequency,
                                             config.center_frequency);
        CHECK(measured == doctest::Approx(expected).epsilon(1e-5));
    }
}

TEST_CASE("transmit path follows the virtual-source geometry") {
    ArrayConfig config;
    const double zf = config.transmit_focus_depth;
    CHECK(transmit_path(config, 0.0, zf) == doctest::Approx(zf));
    CHECK(transmit_path(config, 0.0, zf + 5e-3) == doctest::Approx(zf + 5e-3));
    CHECK(transmit_path(config, 0.0, zf - 5e-3) == doctest::Approx(zf - 5e-3));
    CHECK(transmit_path(config, 3e-3, zf) == doctest::Approx(zf + 3e-3));
}

TEST_CASE("simulation is linear in the scatterer amplitudes") {
    PhantomSpec spec = default_phantom(5);
    spec.scatterer_density = 0.5;
    const ScattererField field = make_phantom(spec);
    ScattererField doubled = field;
    for (auto& a : doubled.amplitude) a *= 2.0;
    const ArrayConfig config;
    const PulseSpec pulse;
    const ChannelFrame f1 = simulate_channel_data(field, config, pulse);
    const ChannelFrame f2 = simulate_channel_data(doubled, config, pulse);
    CHECK((f2.samples - 2.0 * f1.samples).cwiseAbs().maxCoeff() == 0.0);

    // alpha A + beta B superposition against separate simulations
    ScattererField a = field, b = field;
    Rng rng(9);
    for (std::size_t k = 0; k < b.amplitude.size(); ++k) b.amplitude[k] = rng.normal();
    ScattererField mix = field;
    const double alpha = 0.7, beta = -1.3;
    for (std::size_t k = 0; k < mix.amplitude.size(); ++k)
        mix.amplitude[k] = alpha * a.amplitude[k] + beta * b.amplitude[k];
    const Eigen::MatrixXd lhs = simulate_channel_data(mix, config, pulse).samples;
    const Eigen::MatrixXd rhs = alpha * simulate_channel_data(a, config, pulse).samples +
                                beta * simulate_channel_data(b, config, pulse).samples;
    const double scale = rhs.cwiseAbs().maxCoeff();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() / scale < 1e-9);
}

TEST_CASE("cyst interior contributes no signal") {
    const PhantomSpec spec = default_phantom(21);
    const ScattererField field = make_phantom(spec);
    ScattererField interior;
    interior.extent = field.extent;
    Rng rng(3);
    // random points strictly inside the cyst, with the amplitude rule applied
    for (int k = 0; k < 200; ++k) {
        const double r = spec.cyst_radius() * std::sqrt(rng.uniform());
        const double theta = rng.uniform(0.0, 2.0 * M_PI);
        const double x = spec.cyst_lateral + r * std::cos(theta);
        const double z = spec.cyst_depth + r * std::sin(theta);
        interior.x.push_back(x);
        interior.z.push_back(z);
        interior.amplitude.push_back(spec.inside_cyst(x, z) ? 0.0 : rng.normal());
    }
    const ChannelFrame frame = simulate_channel_data(interior, ArrayConfig{}, PulseSpec{});
    CHECK(frame.samples.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("explicit time window must cover the field extent") {
    const PhantomSpec spec = default_phantom(4);
    const ScattererField field = make_phantom(spec);
    const TimeWindow too_short{90e-6, 64};
    CHECK_THROWS_AS(simulate_channel_data(field, ArrayConfig{}, PulseSpec{}, too_short),
                    ConfigError);
}

TEST_CASE("add_noise hits the requested SNR") {
    ChannelFrame frame;
    frame.config = ArrayConfig{};
    frame.samples.resize(2000, 65); // > 1e5 samples
    Rng rng(13);
    for (Eigen::Index i = 0; i < frame.samples.size(); ++i)
        frame.samples.data()[i] = rng.normal();
    const double p_signal = frame.samples.squaredNorm() / frame.samples.size();

    const ChannelFrame noisy = add_noise(frame, 50.0, 99);
    const double p_noise = (noisy.samples - frame.samples).squaredNorm() / frame.samples.size();
    const double snr = 10.0 * std::log10(p_signal / p_noise);
    CHECK(snr == doctest::Approx(50.0).epsilon(0.01)); // +-0.5 dB window

    const ChannelFrame same = add_noise(frame, 50.0, 99);
    CHECK(noisy.samples == same.samples);

    const ChannelFrame clean = add_noise(frame, std::numeric_limits<double>::infinity(), 1);
    CHECK(clean.samples == frame.samples);

    ChannelFrame zero = frame;
    zero.samples.setZero();
    CHECK_THROWS_AS(add_noise(zero, 50.0, 1), DataError);
}

TEST_CASE("domain shift identity and determinism") {
    const PhantomSpec spec = default_phantom(31);
    const ChannelFrame frame = simulate_channel_data(make_phantom(spec), ArrayConfig{}, PulseSpec{});

    ShiftSpec identity;
    identity.phase_screen_rms = 0.0;
    identity.gain_ripple_db = 0.0;
    identity.clutter_to_signal_db.reset();
    const ChannelFrame shifted = apply_domain_shift(frame, identity);
    CHECK(shifted.domain_tag == Domain::target);
    CHECK(shifted.samples == frame.samples);

    ShiftSpec spec1;
    spec1.rng_seed = 12;
    const ChannelFrame a = apply_domain_shift(frame, spec1);
    const ChannelFrame b = apply_domain_shift(frame, spec1);
    CHECK(a.samples == b.samples);
    CHECK_THROWS_AS(apply_domain_shift(a, spec1), DataError); // already target
}

TEST_CASE("phase screen delays measure at the requested rms") {
    ArrayConfig config;
    PhantomSpec spec = default_phantom(8);
    spec.field_extent = {-6e-3, 6e-3, 64e-3, 76e-3};
    const ChannelFrame frame = simulate_channel_data(make_phantom(spec), config, PulseSpec{});

    ShiftSpec shift;
    shift.phase_screen_rms = 50e-9;
    shift.phase_screen_correlation = 8.0;
    shift.gain_ripple_db = 0.0;
    shift.clutter_to_signal_db.reset();
    shift.rng_seed = 5;
    const ChannelFrame shifted = apply_domain_shift(frame, shift);

    // Lag-estimation oracle: per element, integer cross-correlation peak of
    // the analytic signals refined by the correlation phase at the peak.
    const double fs = config.sampling_frequency, fc = config.center_frequency;
    double sum2 = 0;
    for (int n = 0; n < config.num_elements; ++n) {
        const Eigen::VectorXcd orig = fft::analytic_signal(frame.samples.col(n));
        const Eigen::VectorXcd shft = fft::analytic_signal(shifted.samples.col(n));
        const int max_lag = 6;
        std::complex<double> best{0, 0};
        int best_k = 0;
        for (int k = -max_lag; k <= max_lag; ++k) {
            std::complex<double> acc{0, 0};
            for (int t = max_lag; t < orig.size() - max_lag; ++t)
                acc += std::conj(orig[t]) * shft[t + k];
            if (std::abs(acc) > std::abs(best)) {
                best = acc;
                best_k = k;
            }
        }
        // shft(t) = orig(t - d): correlation peak sits at k = -d_samples.
        const double delay = -best_k / fs + std::arg(best) / (2.0 * M_PI * fc);
        sum2 += delay * delay;
    }
    const double rms = std::sqrt(sum2 / config.num_elements);
    CHECK(rms == doctest::Approx(50e-9).epsilon(0.10));
}

TEST_CASE("clutter at 0 dB doubles the frame power") {
    const PhantomSpec spec = default_phantom(64);
    const ChannelFrame frame = simulate_channel_data(make_phantom(spec), ArrayConfig{}, PulseSpec{});
    ShiftSpec shift;
    shift.phase_screen_rms = 0.0;
    shift.gain_ripple_db = 0.0;
    shift.clutter_to_signal_db = 0.0;
    shift.rng_seed = 17;
    const ChannelFrame shifted = apply_domain_shift(frame, shift);
    const double p_in = frame.samples.squaredNorm() / frame.samples.size();
    const double p_out = shifted.samples.squaredNorm() / shifted.samples.size();
    CHECK(p_out / p_in == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("frame persistence round trip") {
    PhantomSpec spec = default_phantom(2);
    spec.scatterer_density = 2.0;
    ChannelFrame frame = simulate_channel_data(make_phantom(spec), ArrayConfig{}, PulseSpec{});
    // float32 container: store the float-rounded samples for bit equality
    frame.samples = frame.samples.cast<float>().cast<double>();
    const auto path = std::filesystem::temp_directory_path() / "dabf_test_frame.chd";
    save_frame(path, frame, {{"id", "t"}});
    const ChannelFrame loaded = load_frame(path);
    CHECK(loaded.samples == frame.samples);
    CHECK(loaded.t0 == frame.t0);
    CHECK(loaded.domain_tag == frame.domain_tag);
    CHECK(loaded.config.num_elements == frame.config.num_elements);
    CHECK(loaded.config.pitch == frame.config.pitch);
}
