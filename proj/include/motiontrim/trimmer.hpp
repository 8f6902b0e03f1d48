#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "motiontrim/frame_io.hpp"
#include "motiontrim/image.hpp"

namespace motiontrim {

struct TrimConfig {
  double threshold = 0.05;  // minimum foreground ratio, inclusive
  int padding = 0;          // frames added on each side of a kept run
};

/// Kept original frame ranges, inclusive, disjoint and ascending.
struct TrimSegmentMap {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t total_kept = 0;

  bool operator==(const TrimSegmentMap&) const = default;
};

double foreground_ratio(const BinaryMask& mask);

/// Ratios belong to frames first_frame, first_frame+1, ...; padding is
/// clamped to [0, total_frames-1] (total_frames 0 means first_frame + ratios.size()).
TrimSegmentMap select_by_ratio(std::span<const double> ratios, const TrimConfig& config, std::size_t first_frame = 0,
                               std::size_t total_frames = 0);
TrimSegmentMap select_frames(std::span<const BinaryMask> masks, const TrimConfig& config,
                             std::size_t first_frame = 0, std::size_t total_frames = 0);

/// Original index of the trimmed frame at position `trimmed_index`.
std::size_t map_to_original(const TrimSegmentMap& map, std::size_t trimmed_index);

/// `total_kept N` header then one `orig_start orig_end` line per run.
std::string map_text(const TrimSegmentMap& map);
TrimSegmentMap parse_map(const std::string& text);
void write_map(const TrimSegmentMap& map, const std::filesystem::path& path);
TrimSegmentMap read_map(const std::filesystem::path& path);

inline constexpr const char* kMapFileName = "map.txt";

/// Copies the kept frames, renumbered from 0 in original order, into out_dir
/// together with the map file. Throws EmptySelection for an empty map.
FrameSequence emit_trimmed(const FrameSequence& seq, const TrimSegmentMap& map, const std::filesystem::path& out_dir);

}  // namespace motiontrim
