#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace proxipm {

/// Planar real-valued image, channels x height x width, intensities
/// nominally in [0,1]. Storage is channel-major, row-major within a channel.
struct ImageTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  Eigen::ArrayXd data;

  ImageTensor() = default;
  ImageTensor(int c, int h, int w)
      : channels(c), height(h), width(w),
        data(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(c) * h * w)) {
    if (c <= 0 || h <= 0 || w <= 0)
      throw std::invalid_argument("ImageTensor: dimensions must be positive");
  }

  static ImageTensor constant(int c, int h, int w, double v) {
    ImageTensor img(c, h, w);
    img.data.setConstant(v);
    return img;
  }

  Eigen::Index size() const { return data.size(); }
  Eigen::Index plane_size() const {
    return static_cast<Eigen::Index>(height) * width;
  }

  double& at(int c, int i, int j) {
    return data[(static_cast<Eigen::Index>(c) * height + i) * width + j];
  }
  double at(int c, int i, int j) const {
    return data[(static_cast<Eigen::Index>(c) * height + i) * width + j];
  }

  Eigen::Map<Eigen::ArrayXd> channel(int c) {
    return {data.data() + static_cast<Eigen::Index>(c) * plane_size(),
            plane_size()};
  }
  Eigen::Map<const Eigen::ArrayXd> channel(int c) const {
    return {data.data() + static_cast<Eigen::Index>(c) * plane_size(),
            plane_size()};
  }

  bool same_shape(const ImageTensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  ImageTensor like() const { return ImageTensor(channels, height, width); }
};

inline void require_same_shape(const ImageTensor& a, const ImageTensor& b,
                               const std::string& what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(what + ": image shapes differ (" +
                                std::to_string(a.channels) + "x" +
                                std::to_string(a.height) + "x" +
                                std::to_string(a.width) + " vs " +
                                std::to_string(b.channels) + "x" +
                                std::to_string(b.height) + "x" +
                                std::to_string(b.width) + ")");
}

inline double dot(const ImageTensor& a, const ImageTensor& b) {
  return (a.data * b.data).sum();
}

inline double norm(const ImageTensor& a) { return std::sqrt(dot(a, a)); }

}  // namespace proxipm
