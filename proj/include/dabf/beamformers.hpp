#pragma once

#include <Eigen/Dense>

#include "dabf/aperture.hpp"

namespace dabf {

// Delay-and-sum: per pixel, the mean of the complex aperture values across
// elements. Returns a [num_depths x num_lateral] complex grid.
Eigen::MatrixXcd das(const FocusedTensor& tensor);

// Generalized coherence factor: per pixel, the fraction of aperture-spectrum
// energy within bins {-m0..m0} weights the DAS value. A cutoff covering all
// bins reproduces DAS exactly; a zero-energy aperture gets weight 0.
Eigen::MatrixXcd gcf(const FocusedTensor& tensor, int m0 = 1);

// GCF weight for a single aperture vector, in [0, 1].
double gcf_weight(const Eigen::Ref<const Eigen::VectorXcd>& aperture, int m0);

struct BModeImage {
    Eigen::MatrixXd intensity_db; // [num_depths x num_lateral], in [-dynamic_range, 0]
    PixelGrid grid;
    double dynamic_range = 60.0; // dB
};

// 20*log10(|v| / max |v|), clipped to [-dynamic_range, 0].
BModeImage envelope_logcompress(const Eigen::Ref<const Eigen::MatrixXcd>& image,
                                const PixelGrid& grid, double dynamic_range = 60.0);

} // namespace dabf
