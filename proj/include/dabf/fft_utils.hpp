#pragma once

#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace dabf::fft {

// Analytic signal of a real vector: FFT, zero the negative-frequency half,
// double the positive half, inverse FFT. The real part of the result is
// replaced by the input so the Hilbert identity Re{a} == x holds exactly.
inline Eigen::VectorXcd analytic_signal(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const int n = static_cast<int>(x.size());
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> time(n), freq(n);
    for (int i = 0; i < n; ++i) time[i] = {x[i], 0.0};
    fft.fwd(freq, time);
    const int half = n / 2;
    for (int i = 1; i < half; ++i) freq[i] *= 2.0;
    if (n % 2 == 0) {
        for (int i = half + 1; i < n; ++i) freq[i] = 0.0;
    } else {
        freq[half] *= 2.0;
        for (int i = half + 1; i < n; ++i) freq[i] = 0.0;
    }
    fft.inv(time, freq);
    Eigen::VectorXcd out(n);
    for (int i = 0; i < n; ++i) out[i] = {x[i], time[i].imag()};
    return out;
}

// Fractional delay by `delay` seconds via a linear phase ramp. The multiplier
// is kept Hermitian (Nyquist bin goes to its real part) so the output is real.
// Circular; callers must keep signal energy away from the window edges.
inline Eigen::VectorXd fractional_delay(const Eigen::Ref<const Eigen::VectorXd>& x, double delay,
                                        double fs) {
    const int n = static_cast<int>(x.size());
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> time(n), freq(n);
    for (int i = 0; i < n; ++i) time[i] = {x[i], 0.0};
    fft.fwd(freq, time);
    const double df = fs / n;
    for (int i = 0; i < n; ++i) {
        const int k = (i <= n / 2) ? i : i - n;
        const double phase = -2.0 * M_PI * k * df * delay;
        if (n % 2 == 0 && i == n / 2) {
            freq[i] *= std::cos(phase);
        } else {
            freq[i] *= std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    fft.inv(time, freq);
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) out[i] = time[i].real();
    return out;
}

} // namespace dabf::fft
