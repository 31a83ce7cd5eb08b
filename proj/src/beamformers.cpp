#include "dabf/beamformers.hpp"

#include <complex>

#include "dabf/errors.hpp"

namespace dabf {

Eigen::MatrixXcd das(const FocusedTensor& tensor) {
    const int D = tensor.num_depths(), L = tensor.num_lateral(), E = tensor.num_elements();
    Eigen::MatrixXcd out(D, L);
    for (int d = 0; d < D; ++d) {
        for (int l = 0; l < L; ++l) {
            std::complex<double> sum{0.0, 0.0};
            for (int e = 0; e < E; ++e) sum += tensor.at(d, l, e);
            out(d, l) = sum / static_cast<double>(E);
        }
    }
    return out;
}

double gcf_weight(const Eigen::Ref<const Eigen::VectorXcd>& aperture, int m0) {
    const int n = static_cast<int>(aperture.size());
    if (m0 < 0) throw ConfigError("gcf: m0 must be >= 0");
    if (2 * m0 + 1 > n) throw ConfigError("gcf: 2*m0+1 exceeds the element count");
    const double total = aperture.squaredNorm(); // = (1/N) * full spectrum energy (Parseval)
    if (total <= 0.0) return 0.0;
    if (2 * m0 + 1 == n) return 1.0; // all bins covered
    double low = 0.0;
    for (int k = -m0; k <= m0; ++k) {
        std::complex<double> bin{0.0, 0.0};
        for (int i = 0; i < n; ++i) {
            const double phase = -2.0 * M_PI * k * i / n;
            bin += aperture[i] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        low += std::norm(bin);
    }
    const double w = low / (n * total);
    return std::clamp(w, 0.0, 1.0);
}

Eigen::MatrixXcd gcf(const FocusedTensor& tensor, int m0) {
    const int D = tensor.num_depths(), L = tensor.num_lateral(), E = tensor.num_elements();
    if (m0 < 0) throw ConfigError("gcf: m0 must be >= 0");
    if (2 * m0 + 1 > E) throw ConfigError("gcf: 2*m0+1 exceeds the element count");
    Eigen::MatrixXcd out(D, L);
    Eigen::VectorXcd aperture(E);
    for (int d = 0; d < D; ++d) {
        for (int l = 0; l < L; ++l) {
            for (int e = 0; e < E; ++e) aperture[e] = tensor.at(d, l, e);
            const double w = gcf_weight(aperture, m0);
            std::complex<double> sum{0.0, 0.0}; // same accumulation order as das()
            for (int e = 0; e < E; ++e) sum += aperture[e];
            out(d, l) = w * (sum / static_cast<double>(E));
        }
    }
    return out;
}

BModeImage envelope_logcompress(const Eigen::Ref<const Eigen::MatrixXcd>& image,
                                const PixelGrid& grid, double dynamic_range) {
    if (dynamic_range <= 0) throw ConfigError("dynamic_range must be positive");
    const Eigen::MatrixXd envelope = image.cwiseAbs();
    const double peak = envelope.maxCoeff();
    if (peak <= 0.0) throw DataError("envelope_logcompress: all-zero image cannot be normalized");
    BModeImage out;
    out.grid = grid;
    out.dynamic_range = dynamic_range;
    out.intensity_db.resize(image.rows(), image.cols());
    for (Eigen::Index i = 0; i < image.rows(); ++i) {
        for (Eigen::Index j = 0; j < image.cols(); ++j) {
            const double v = envelope(i, j);
            const double db = v > 0.0 ? 20.0 * std::log10(v / peak) : -dynamic_range;
            out.intensity_db(i, j) = std::clamp(db, -dynamic_range, 0.0);
        }
    }
    return out;
}

} // namespace dabf
