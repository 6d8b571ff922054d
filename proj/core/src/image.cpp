#include "facecamo/image.hpp"

#include <algorithm>
#include <cmath>

namespace facecamo {

double sample_bilinear(const Image& img, double x, double y, int c) {
  // Pixel centres sit at half-integers.
  const double fx = x - 0.5;
  const double fy = y - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double ax = fx - x0;
  const double ay = fy - y0;
  auto px = [&](int yy, int xx) {
    yy = std::clamp(yy, 0, img.height() - 1);
    xx = std::clamp(xx, 0, img.width() - 1);
    return img.at(yy, xx, c);
  };
  const double top = (1.0 - ax) * px(y0, x0) + ax * px(y0, x0 + 1);
  const double bottom = (1.0 - ax) * px(y0 + 1, x0) + ax * px(y0 + 1, x0 + 1);
  return (1.0 - ay) * top + ay * bottom;
}

double sample_nearest(const Image& img, double x, double y, int c) {
  const int xi = std::clamp(static_cast<int>(std::floor(x)), 0, img.width() - 1);
  const int yi = std::clamp(static_cast<int>(std::floor(y)), 0, img.height() - 1);
  return img.at(yi, xi, c);
}

Image resize_area(const Image& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  Image out(height, width, src.channels());
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double y0 = y * sy, y1 = (y + 1) * sy;
    for (int x = 0; x < width; ++x) {
      const double x0 = x * sx, x1 = (x + 1) * sx;
      for (int c = 0; c < src.channels(); ++c) {
        double acc = 0.0, area = 0.0;
        for (int iy = static_cast<int>(std::floor(y0)); iy < static_cast<int>(std::ceil(y1)); ++iy) {
          const double wy = std::min(y1, iy + 1.0) - std::max(y0, static_cast<double>(iy));
          if (wy <= 0.0) continue;
          for (int ix = static_cast<int>(std::floor(x0)); ix < static_cast<int>(std::ceil(x1)); ++ix) {
            const double wx = std::min(x1, ix + 1.0) - std::max(x0, static_cast<double>(ix));
            if (wx <= 0.0) continue;
            acc += wy * wx * src.at(std::min(iy, src.height() - 1), std::min(ix, src.width() - 1), c);
            area += wy * wx;
          }
        }
        out.at(y, x, c) = acc / area;
      }
    }
  }
  return out;
}

}  // namespace facecamo
