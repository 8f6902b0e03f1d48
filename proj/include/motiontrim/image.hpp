#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace motiontrim {

/// 8-bit raster, row-major, interleaved channels.
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  Frame() = default;
  Frame(int w, int h, int c, std::uint8_t fill = 0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const Frame&) const = default;
};

enum class Label : std::uint8_t { Background = 0, Foreground = 1 };

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;  // 1 = foreground

  BinaryMask() = default;
  BinaryMask(int w, int h, Label fill = Label::Background);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool foreground(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, Label l) {
    labels[static_cast<std::size_t>(y) * width + x] = static_cast<std::uint8_t>(l);
  }
  std::size_t foreground_count() const;

  bool operator==(const BinaryMask&) const = default;
};

}  // namespace motiontrim
