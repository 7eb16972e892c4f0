#pragma once

#include <complex>
#include <vector>

namespace proxipm::detail {

/// Forward 2-D DFT of a real h-by-w plane (row-major), output length h*w.
std::vector<std::complex<double>> dft2(const double* plane, int h, int w);

/// Forward 2-D DFT of a complex plane.
std::vector<std::complex<double>> dft2(const std::complex<double>* plane,
                                       int h, int w);

/// Elementwise spectrum multiply followed by inverse 2-D DFT; writes the real
/// part of the result into out (already scaled by 1/(h*w)).
void multiply_spectrum_inverse(const double* plane,
                               const std::complex<double>* spectrum,
                               bool conjugate_spectrum, int h, int w,
                               double* out);

}  // namespace proxipm::detail
