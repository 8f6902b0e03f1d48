#include "motiontrim/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "motiontrim/error.hpp"
#include "motiontrim/frame_io.hpp"

namespace motiontrim {

namespace fs = std::filesystem;

namespace {

// Triangle wave on [0, span].
int bounce(double s, int span) {
  if (span <= 0) return 0;
  const double period = 2.0 * span;
  double m = std::fmod(s, period);
  if (m < 0) m += period;
  return static_cast<int>(std::floor(m <= span ? m : period - m));
}

}  // namespace

SyntheticScene make_scene(const SceneConfig& config) {
  if (config.width < config.square || config.height < config.square || config.frames == 0) {
    throw Error(ErrorKind::ConfigError, "scene too small for the square");
  }
  const std::size_t motion_end = config.motion_end == 0 ? config.frames : std::min(config.motion_end, config.frames);
  std::mt19937_64 rng(config.seed);

  Frame background(config.width, config.height, 1);
  std::uniform_real_distribution<double> grain(-20.0, 20.0);
  for (int y = 0; y < config.height; ++y) {
    for (int x = 0; x < config.width; ++x) {
      const double v = 90.0 + 30.0 * std::sin(x / 5.0) * std::cos(y / 7.0) + grain(rng);
      background.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(v), 30.0, 150.0));
    }
  }

  SyntheticScene scene;
  std::normal_distribution<double> noise(0.0, config.noise_sigma);
  double travelled = 0.0;
  for (std::size_t t = 0; t < config.frames; ++t) {
    Frame f = background;
    BinaryMask truth(config.width, config.height);
    const bool moving = t >= config.motion_start && t < motion_end;
    if (moving) {
      const int px = bounce(travelled, config.width - config.square);
      const int py = bounce(0.5 * travelled + 3.0, config.height - config.square);
      for (int y = py; y < py + config.square; ++y) {
        for (int x = px; x < px + config.square; ++x) {
          f.at(x, y) = config.square_level;
          truth.set(x, y, Label::Foreground);
        }
      }
      double speed = config.speed;
      if (config.peak_speed > config.speed && motion_end > config.motion_start + 1) {
        const double u = static_cast<double>(t - config.motion_start) / static_cast<double>(motion_end - config.motion_start - 1);
        speed += (config.peak_speed - config.speed) * (1.0 - std::abs(2.0 * u - 1.0));
      }
      travelled += speed;
    }
    if (config.noise_sigma > 0.0) {
      for (auto& v : f.data) v = static_cast<std::uint8_t>(std::clamp(std::round(v + noise(rng)), 0.0, 255.0));
    }
    scene.frames.push_back(std::move(f));
    scene.truth.push_back(std::move(truth));
  }
  return scene;
}

void write_scene(const SyntheticScene& scene, const fs::path& frames_dir, const fs::path& truth_dir,
                 std::span<const std::size_t> labeled_frames) {
  fs::create_directories(frames_dir);
  for (std::size_t t = 0; t < scene.frames.size(); ++t) write_pnm(scene.frames[t], frames_dir / frame_filename(t));
  if (labeled_frames.empty()) return;
  fs::create_directories(truth_dir);
  for (std::size_t t : labeled_frames) {
    if (t >= scene.truth.size()) throw Error(ErrorKind::IndexOutOfRange, "labeled frame outside the scene");
    write_mask(scene.truth[t], truth_dir / frame_filename(t));
  }
}

std::vector<Bag> make_motion_bags(int positives, int negatives, std::uint64_t seed, int segments) {
  std::mt19937_64 rng(seed);
  std::vector<Bag> bags;
  const std::size_t per_segment = 3;
  const std::size_t n_frames = per_segment * static_cast<std::size_t>(segments);
  auto clip = [&](bool anomalous) {
    SceneConfig cfg;
    cfg.width = 64;
    cfg.height = 64;
    cfg.frames = n_frames;
    cfg.square = std::uniform_int_distribution<int>(8, 20)(rng);
    cfg.seed = rng();
    cfg.speed = std::uniform_real_distribution<double>(0.5, 1.5)(rng);
    if (anomalous) {
      // Fast burst over 4..8 segments somewhere inside the clip.
      const int len = std::uniform_int_distribution<int>(4, 8)(rng);
      const int start = std::uniform_int_distribution<int>(0, segments - len)(rng);
      cfg.motion_start = static_cast<std::size_t>(start) * per_segment;
      cfg.motion_end = static_cast<std::size_t>(start + len) * per_segment;
      cfg.speed = 1.0;
      cfg.peak_speed = std::uniform_real_distribution<double>(4.0, 6.0)(rng);
    } else if (std::uniform_int_distribution<int>(0, 1)(rng) == 1) {
      // Some normal clips only show motion for part of the time.
      const int start = std::uniform_int_distribution<int>(0, segments / 2)(rng);
      cfg.motion_start = static_cast<std::size_t>(start) * per_segment;
      cfg.motion_end = cfg.motion_start + n_frames / 2;
    }
    SyntheticScene scene = make_scene(cfg);
    if (anomalous) {
      // Normal-speed motion around the burst as well.
      SceneConfig calm = cfg;
      calm.motion_start = 0;
      calm.motion_end = 0;
      calm.peak_speed = 0.0;
      calm.speed = 1.0;
      const SyntheticScene base = make_scene(calm);
      for (std::size_t t = 0; t < n_frames; ++t) {
        if (t < cfg.motion_start || t >= cfg.motion_end) scene.frames[t] = base.frames[t];
      }
    }
    return video_features(scene.frames, segments);
  };
  for (int i = 0; i < positives; ++i) bags.push_back({clip(true), Polarity::Positive});
  for (int i = 0; i < negatives; ++i) bags.push_back({clip(false), Polarity::Negative});
  return bags;
}

std::vector<Bag> make_gaussian_bags(int positives, int negatives, int dims, int shifted, double shift,
                                    std::uint64_t seed, int segments) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Bag> bags;
  auto bag = [&](Polarity polarity) {
    Bag b;
    b.polarity = polarity;
    b.features.segments = segments;
    b.features.dims = dims;
    b.features.values.resize(static_cast<std::size_t>(segments) * dims);
    for (auto& v : b.features.values) v = normal(rng);
    if (polarity == Polarity::Positive) {
      std::vector<int> idx(static_cast<std::size_t>(segments));
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (int k = 0; k < shifted; ++k) {
        for (int d = 0; d < dims; ++d) b.features.values[static_cast<std::size_t>(idx[k]) * dims + d] += shift;
      }
    }
    return b;
  };
  for (int i = 0; i < positives; ++i) bags.push_back(bag(Polarity::Positive));
  for (int i = 0; i < negatives; ++i) bags.push_back(bag(Polarity::Negative));
  return bags;
}

}  // namespace motiontrim
