#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "proxipm/image.hpp"

namespace proxipm {

enum class GradientDirection { Vertical, Horizontal };

/// Periodic convolution on an h-by-w grid, defined by a centered kernel with
/// odd side lengths. Immutable after construction; safe to share across
/// threads. Channels are processed independently.
class CirculantOperator {
 public:
  /// kernel(r, c) covers offsets r - rows/2, c - cols/2. Even side lengths
  /// are rejected rather than re-centered.
  CirculantOperator(Eigen::ArrayXXd kernel, int height, int width);

  static CirculantOperator identity(int height, int width);
  static CirculantOperator gradient(GradientDirection dir, int height,
                                    int width);

  int height() const { return height_; }
  int width() const { return width_; }
  const Eigen::ArrayXXd& kernel() const { return kernel_; }

  /// DFT eigenvalues of the operator (row-major over frequencies).
  const std::vector<std::complex<double>>& spectrum() const {
    return spectrum_;
  }

  ImageTensor apply(const ImageTensor& x) const;
  ImageTensor apply_adjoint(const ImageTensor& x) const;

  /// Eigenvalues of A^T A in the Fourier basis: |spectrum|^2 per frequency.
  Eigen::ArrayXd eigenvalues_normal() const;

  /// Operator 2-norm, max |spectrum|.
  double norm() const;

 private:
  void apply_impl(const ImageTensor& x, bool adjoint, ImageTensor& out) const;

  Eigen::ArrayXXd kernel_;
  int height_ = 0;
  int width_ = 0;
  std::vector<std::complex<double>> spectrum_;
};

/// Kernel builders. Gaussian kernels are truncated at ceil(3.5*std) and
/// normalized to unit sum; uniform kernels are size x size with unit sum.
Eigen::ArrayXXd gaussian_kernel(double stddev, int size = 0);
Eigen::ArrayXXd uniform_kernel(int size);
Eigen::ArrayXXd identity_kernel();

/// Parses "gaussian:<std>[:size]", "uniform:<size>", "file:<path>" or a bare
/// path into a kernel array.
Eigen::ArrayXXd make_kernel(const std::string& spec, bool normalize = true);

/// Plain-text kernel file: first line "rows cols", then row-major reals.
/// Kernels are normalized to unit sum at load unless normalize is false.
Eigen::ArrayXXd load_kernel_text(const std::string& path,
                                 bool normalize = true);
void save_kernel_text(const std::string& path, const Eigen::ArrayXXd& kernel);

}  // namespace proxipm
