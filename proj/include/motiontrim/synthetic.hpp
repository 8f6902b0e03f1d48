#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "motiontrim/anomaly_mil.hpp"
#include "motiontrim/image.hpp"

namespace motiontrim {

/// Static textured background with one bright square. Inside the motion
/// window the square travels along a bouncing diagonal path; outside it the
/// square is parked off-frame. Gaussian sensor noise on every frame.
struct SceneConfig {
  int width = 64;
  int height = 64;
  std::size_t frames = 300;
  int square = 8;
  double noise_sigma = 5.0;
  std::size_t motion_start = 0;
  std::size_t motion_end = 0;  // exclusive; 0 means "until the last frame"
  double speed = 1.0;          // pixels per frame along x
  double peak_speed = 0.0;     // > speed: triangular ramp speed -> peak -> speed over the window
  std::uint8_t square_level = 230;
  std::uint64_t seed = 7;
};

struct SyntheticScene {
  std::vector<Frame> frames;       // luminance
  std::vector<BinaryMask> truth;   // square pixels while visible
};

SyntheticScene make_scene(const SceneConfig& config);

/// Writes frames as NNNNNN.pgm into frames_dir and the truth masks for the
/// listed frames into truth_dir (same numbering).
void write_scene(const SyntheticScene& scene, const std::filesystem::path& frames_dir,
                 const std::filesystem::path& truth_dir, std::span<const std::size_t> labeled_frames);

/// Bags from short rendered clips: negatives move at constant speed, positives
/// contain a burst of fast motion spanning a few segments.
std::vector<Bag> make_motion_bags(int positives, int negatives, std::uint64_t seed, int segments = kDefaultSegments);

/// Gaussian bags: every feature ~ N(0, 1); positives shift `shifted` random
/// segments by +shift on every dimension.
std::vector<Bag> make_gaussian_bags(int positives, int negatives, int dims, int shifted, double shift,
                                    std::uint64_t seed, int segments = kDefaultSegments);

}  // namespace motiontrim
