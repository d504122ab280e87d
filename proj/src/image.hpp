#pragma once

#include <string>
#include <vector>

namespace contpose {

// Dense row-major image, interleaved channels, values nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  static Image zeros(int w, int h, int c);

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

// 8-bit PNG IO. Gray and RGB only; alpha is stripped on load, 16-bit depth
// narrowed. Values clamp to [0, 1] on save. Throws IoError on failure.
void save_png(const std::string& path, const Image& img);
Image load_png(const std::string& path);

}  // namespace contpose
