#include "proxipm/linops.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fft_engine.hpp"

namespace proxipm {

CirculantOperator::CirculantOperator(Eigen::ArrayXXd kernel, int height,
                                     int width)
    : kernel_(std::move(kernel)), height_(height), width_(width) {
  if (height_ <= 0 || width_ <= 0)
    throw std::invalid_argument("CirculantOperator: grid must be positive");
  const auto kr = kernel_.rows();
  const auto kc = kernel_.cols();
  if (kr <= 0 || kc <= 0)
    throw std::invalid_argument("CirculantOperator: empty kernel");
  if (kr % 2 == 0 || kc % 2 == 0)
    throw std::invalid_argument(
        "CirculantOperator: kernel side lengths must be odd (got " +
        std::to_string(kr) + "x" + std::to_string(kc) + ")");
  if (kr > height_ || kc > width_)
    throw std::invalid_argument(
        "CirculantOperator: kernel larger than the grid");

  // First column of the circulant: c[u mod h, v mod w] = kernel[u+rh, v+rw],
  // so that applying equals sum_{u,v} k[u,v] x[(i-u) mod h, (j-v) mod w].
  const int rh = static_cast<int>(kr) / 2;
  const int rw = static_cast<int>(kc) / 2;
  std::vector<double> first_column(static_cast<std::size_t>(height_) * width_,
                                   0.0);
  for (int u = -rh; u <= rh; ++u) {
    for (int v = -rw; v <= rw; ++v) {
      const int i = (u % height_ + height_) % height_;
      const int j = (v % width_ + width_) % width_;
      first_column[static_cast<std::size_t>(i) * width_ + j] +=
          kernel_(u + rh, v + rw);
    }
  }
  spectrum_ = detail::dft2(first_column.data(), height_, width_);
}

CirculantOperator CirculantOperator::identity(int height, int width) {
  return CirculantOperator(identity_kernel(), height, width);
}

CirculantOperator CirculantOperator::gradient(GradientDirection dir,
                                              int height, int width) {
  // Forward circular difference: (Dx)_i = x_{i+1} - x_i along the chosen
  // axis, stored as a 3-tap centered kernel [1, -1, 0].
  if (dir == GradientDirection::Vertical) {
    Eigen::ArrayXXd k(3, 1);
    k(0, 0) = 1.0;
    k(1, 0) = -1.0;
    k(2, 0) = 0.0;
    return CirculantOperator(std::move(k), height, width);
  }
  Eigen::ArrayXXd k(1, 3);
  k(0, 0) = 1.0;
  k(0, 1) = -1.0;
  k(0, 2) = 0.0;
  return CirculantOperator(std::move(k), height, width);
}

void CirculantOperator::apply_impl(const ImageTensor& x, bool adjoint,
                                   ImageTensor& out) const {
  if (x.height != height_ || x.width != width_)
    throw std::invalid_argument(
        "CirculantOperator: image spatial shape " + std::to_string(x.height) +
        "x" + std::to_string(x.width) + " does not match operator grid " +
        std::to_string(height_) + "x" + std::to_string(width_));
  for (int c = 0; c < x.channels; ++c) {
    detail::multiply_spectrum_inverse(
        x.data.data() + static_cast<Eigen::Index>(c) * x.plane_size(),
        spectrum_.data(), adjoint, height_, width_,
        out.data.data() + static_cast<Eigen::Index>(c) * x.plane_size());
  }
}

ImageTensor CirculantOperator::apply(const ImageTensor& x) const {
  ImageTensor out = x.like();
  apply_impl(x, false, out);
  return out;
}

ImageTensor CirculantOperator::apply_adjoint(const ImageTensor& x) const {
  ImageTensor out = x.like();
  apply_impl(x, true, out);
  return out;
}

Eigen::ArrayXd CirculantOperator::eigenvalues_normal() const {
  Eigen::ArrayXd eig(static_cast<Eigen::Index>(spectrum_.size()));
  for (std::size_t i = 0; i < spectrum_.size(); ++i)
    eig[static_cast<Eigen::Index>(i)] = std::norm(spectrum_[i]);
  return eig;
}

double CirculantOperator::norm() const {
  double m = 0.0;
  for (const auto& s : spectrum_) m = std::max(m, std::abs(s));
  return m;
}

Eigen::ArrayXXd gaussian_kernel(double stddev, int size) {
  if (!(stddev > 0.0))
    throw std::invalid_argument("gaussian_kernel: std must be positive");
  if (size == 0) size = 2 * static_cast<int>(std::ceil(3.5 * stddev)) + 1;
  if (size <= 0 || size % 2 == 0)
    throw std::invalid_argument("gaussian_kernel: size must be odd");
  const int r = size / 2;
  Eigen::ArrayXXd k(size, size);
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j)
      k(i + r, j + r) = std::exp(-(i * i + j * j) / (2.0 * stddev * stddev));
  k /= k.sum();
  return k;
}

Eigen::ArrayXXd uniform_kernel(int size) {
  if (size <= 0 || size % 2 == 0)
    throw std::invalid_argument("uniform_kernel: size must be odd");
  return Eigen::ArrayXXd::Constant(size, size, 1.0 / (size * size));
}

Eigen::ArrayXXd identity_kernel() {
  return Eigen::ArrayXXd::Constant(1, 1, 1.0);
}

Eigen::ArrayXXd make_kernel(const std::string& spec, bool normalize) {
  if (spec.rfind("gaussian:", 0) == 0) {
    const std::string rest = spec.substr(9);
    const auto colon = rest.find(':');
    const double stddev = std::stod(rest.substr(0, colon));
    int size = 0;
    if (colon != std::string::npos) size = std::stoi(rest.substr(colon + 1));
    return gaussian_kernel(stddev, size);
  }
  if (spec.rfind("uniform:", 0) == 0)
    return uniform_kernel(std::stoi(spec.substr(8)));
  if (spec == "identity") return identity_kernel();
  if (spec.rfind("file:", 0) == 0)
    return load_kernel_text(spec.substr(5), normalize);
  return load_kernel_text(spec, normalize);
}

Eigen::ArrayXXd load_kernel_text(const std::string& path, bool normalize) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("load_kernel_text: cannot open '" + path + "'");
  int rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0)
    throw std::runtime_error("load_kernel_text: '" + path +
                             "' must start with 'rows cols'");
  if (rows % 2 == 0 || cols % 2 == 0)
    throw std::runtime_error("load_kernel_text: kernel in '" + path +
                             "' must have odd side lengths");
  Eigen::ArrayXXd k(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (!(in >> k(i, j)))
        throw std::runtime_error("load_kernel_text: '" + path +
                                 "' is truncated");
  if (normalize) {
    const double s = k.sum();
    if (std::abs(s) < 1e-300)
      throw std::runtime_error("load_kernel_text: kernel sum is zero, cannot "
                               "normalize (use --no-normalize)");
    k /= s;
  }
  return k;
}

void save_kernel_text(const std::string& path, const Eigen::ArrayXXd& kernel) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("save_kernel_text: cannot write '" + path + "'");
  out << kernel.rows() << " " << kernel.cols() << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
    for (Eigen::Index j = 0; j < kernel.cols(); ++j) {
      out << kernel(i, j);
      out << (j + 1 == kernel.cols() ? '\n' : ' ');
    }
  }
}

}  // namespace proxipm
