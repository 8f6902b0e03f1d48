#include "motiontrim/image.hpp"

#include <algorithm>

namespace motiontrim {

Frame::Frame(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

BinaryMask::BinaryMask(int w, int h, Label fill)
    : width(w), height(h), labels(static_cast<std::size_t>(w) * h, static_cast<std::uint8_t>(fill)) {}

std::size_t BinaryMask::foreground_count() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](std::uint8_t v) { return v != 0; }));
}

}  // namespace motiontrim
