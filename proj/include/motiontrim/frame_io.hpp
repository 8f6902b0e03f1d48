#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "motiontrim/image.hpp"

namespace motiontrim {

/// An on-disk directory of zero-padded `NNNNNN.pgm` / `.ppm` frames.
struct FrameSequence {
  std::filesystem::path directory;
  std::vector<std::filesystem::path> files;  // in frame order
  std::size_t frame_count = 0;
  int width = 0;
  int height = 0;
  int channels = 1;
  double fps = 30.0;
  long first_index = 0;  // numeric index of the first file (0- or 1-based)
};

/// Duration/size/frames/time row of a stage report.
struct SequenceStats {
  std::size_t frames = 0;
  double fps = 30.0;
  std::uint64_t size_bytes = 0;
  double wall_seconds = 0.0;

  std::string duration() const;  // "MM:SS", floor semantics
  std::string size_mb() const;   // decimal megabytes, one decimal
};

// Netpbm codec. Only binary P5/P6 with maxval 255.
Frame decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& what = "frame");
std::vector<std::uint8_t> encode_pnm(const Frame& frame);
Frame read_pnm(const std::filesystem::path& path);
void write_pnm(const Frame& frame, const std::filesystem::path& path);

FrameSequence load_sequence(const std::filesystem::path& directory, double fps = 30.0);
Frame read_frame(const FrameSequence& seq, std::size_t index);
/// Every frame converted to luminance, in order.
std::vector<Frame> read_luminance_frames(const FrameSequence& seq);

/// Rec. 601 luma; single-channel frames are returned unchanged.
Frame to_luminance(const Frame& frame);

/// P5 PGM, foreground = 255, background = 0.
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);
/// Pixels >= 128 read as foreground.
BinaryMask read_mask(const std::filesystem::path& path);

/// Numbered `.pgm` files in a directory keyed by their numeric stem.
std::vector<std::pair<long, std::filesystem::path>> list_numbered_files(
    const std::filesystem::path& directory, const std::vector<std::string>& extensions);

std::string frame_filename(std::size_t index, const std::string& extension = ".pgm");

std::uint64_t directory_bytes(const FrameSequence& seq);
SequenceStats sequence_stats(const FrameSequence& seq, double wall_seconds);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace motiontrim
