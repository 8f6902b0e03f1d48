#include "motiontrim/trimmer.hpp"

#include <fmt/format.h>

#include <sstream>

#include "motiontrim/error.hpp"

namespace motiontrim {

namespace fs = std::filesystem;

double foreground_ratio(const BinaryMask& mask) {
  if (mask.pixel_count() == 0) throw Error(ErrorKind::DimensionMismatch, "empty mask");
  return static_cast<double>(mask.foreground_count()) / static_cast<double>(mask.pixel_count());
}

TrimSegmentMap select_by_ratio(std::span<const double> ratios, const TrimConfig& config, std::size_t first_frame,
                               std::size_t total_frames) {
  if (config.padding < 0 || !(config.threshold >= 0.0)) {
    throw Error(ErrorKind::ConfigError, "trim threshold must be >= 0 and padding >= 0");
  }
  if (total_frames == 0) total_frames = first_frame + ratios.size();
  const std::size_t pad = static_cast<std::size_t>(config.padding);

  TrimSegmentMap map;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!(ratios[i] >= config.threshold)) continue;
    const std::size_t t = first_frame + i;
    const std::size_t lo = t >= pad ? t - pad : 0;
    const std::size_t hi = std::min(total_frames - 1, t + pad);
    // Runs arrive in ascending order, so merging only looks at the last one.
    if (!map.runs.empty() && lo <= map.runs.back().second + 1) {
      map.runs.back().second = std::max(map.runs.back().second, hi);
    } else {
      map.runs.emplace_back(lo, hi);
    }
  }
  for (const auto& [a, b] : map.runs) map.total_kept += b - a + 1;
  return map;
}

TrimSegmentMap select_frames(std::span<const BinaryMask> masks, const TrimConfig& config, std::size_t first_frame,
                             std::size_t total_frames) {
  std::vector<double> ratios;
  ratios.reserve(masks.size());
  for (const auto& m : masks) ratios.push_back(foreground_ratio(m));
  return select_by_ratio(ratios, config, first_frame, total_frames);
}

std::size_t map_to_original(const TrimSegmentMap& map, std::size_t trimmed_index) {
  std::size_t remaining = trimmed_index;
  for (const auto& [a, b] : map.runs) {
    const std::size_t len = b - a + 1;
    if (remaining < len) return a + remaining;
    remaining -= len;
  }
  throw Error(ErrorKind::IndexOutOfRange, fmt::format("trimmed index {} of {}", trimmed_index, map.total_kept));
}

std::string map_text(const TrimSegmentMap& map) {
  std::string out = fmt::format("total_kept {}\n", map.total_kept);
  for (const auto& [a, b] : map.runs) out += fmt::format("{} {}\n", a, b);
  return out;
}

TrimSegmentMap parse_map(const std::string& text) {
  std::istringstream in(text);
  std::string key;
  long long total = -1;
  if (!(in >> key >> total) || key != "total_kept" || total < 0) {
    throw Error(ErrorKind::ParseError, "map file: expected 'total_kept N' header");
  }
  TrimSegmentMap map;
  long long a = 0;
  long long b = 0;
  while (in >> a) {
    if (!(in >> b) || a < 0 || b < a) throw Error(ErrorKind::ParseError, "map file: bad run");
    if (!map.runs.empty() && static_cast<std::size_t>(a) <= map.runs.back().second) {
      throw Error(ErrorKind::ParseError, "map file: runs must be ascending and disjoint");
    }
    map.runs.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    map.total_kept += static_cast<std::size_t>(b - a + 1);
  }
  if (!in.eof()) throw Error(ErrorKind::ParseError, "map file: trailing garbage");
  if (map.total_kept != static_cast<std::size_t>(total)) {
    throw Error(ErrorKind::ParseError, fmt::format("map file: header says {} kept, runs cover {}", total, map.total_kept));
  }
  return map;
}

void write_map(const TrimSegmentMap& map, const fs::path& path) { write_text_file(path, map_text(map)); }

TrimSegmentMap read_map(const fs::path& path) { return parse_map(read_text_file(path)); }

FrameSequence emit_trimmed(const FrameSequence& seq, const TrimSegmentMap& map, const fs::path& out_dir) {
  if (map.total_kept == 0 || map.runs.empty()) throw Error(ErrorKind::EmptySelection, "no frames selected");
  if (map.runs.back().second >= seq.frame_count) {
    throw Error(ErrorKind::IndexOutOfRange,
                fmt::format("map references frame {} of {}", map.runs.back().second, seq.frame_count));
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  std::size_t next = 0;
  for (const auto& [a, b] : map.runs) {
    for (std::size_t t = a; t <= b; ++t) {
      const auto& src = seq.files[t];
      write_file_bytes(out_dir / frame_filename(next++, src.extension().string()), read_file_bytes(src));
    }
  }
  write_map(map, out_dir / kMapFileName);
  return load_sequence(out_dir, seq.fps);
}

}  // namespace motiontrim
