#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace facecamo {

// Interleaved H x W x C image of doubles. Value range is a convention of the
// caller: patterns live in [0, 255], face images in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0)
      : height_(height), width_(width), channels_(channels),
        data_(static_cast<std::size_t>(height) * width * channels, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// Bilinear sample with clamp-to-edge addressing. (x, y) are continuous pixel
// coordinates where pixel (i, j) covers [j, j+1) x [i, i+1).
double sample_bilinear(const Image& img, double x, double y, int c);

// Nearest-neighbour sample, clamp-to-edge.
double sample_nearest(const Image& img, double x, double y, int c);

// Area-averaged resize.
Image resize_area(const Image& src, int height, int width);

}  // namespace facecamo
