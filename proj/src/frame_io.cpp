#include "motiontrim/frame_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "motiontrim/error.hpp"

namespace motiontrim {

namespace fs = std::filesystem;

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
bool next_token(const std::vector<std::uint8_t>& bytes, std::size_t& pos, std::string& token) {
  token.clear();
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
    token.push_back(static_cast<char>(bytes[pos++]));
  }
  return !token.empty();
}

int parse_header_int(const std::string& token, const std::string& what) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw Error(ErrorKind::CorruptFile, fmt::format("{}: bad header field '{}'", what, token));
  }
  try {
    return std::stoi(token);
  } catch (const std::exception&) {
    throw Error(ErrorKind::CorruptFile, fmt::format("{}: header field out of range '{}'", what, token));
  }
}

bool is_numeric_stem(const std::string& stem) {
  return !stem.empty() && std::all_of(stem.begin(), stem.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

Frame decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(ErrorKind::UnsupportedFormat, what + ": not a netpbm file");
  }
  int channels = 0;
  if (bytes[1] == '5') {
    channels = 1;
  } else if (bytes[1] == '6') {
    channels = 3;
  } else {
    throw Error(ErrorKind::UnsupportedFormat, fmt::format("{}: netpbm variant P{} not supported", what, static_cast<char>(bytes[1])));
  }

  std::size_t pos = 2;
  std::string token;
  int fields[3] = {0, 0, 0};
  for (int& field : fields) {
    if (!next_token(bytes, pos, token)) throw Error(ErrorKind::CorruptFile, what + ": truncated header");
    field = parse_header_int(token, what);
  }
  const int width = fields[0];
  const int height = fields[1];
  const int maxval = fields[2];
  if (width < 1 || height < 1) throw Error(ErrorKind::CorruptFile, what + ": empty image");
  if (maxval != 255) {
    throw Error(ErrorKind::UnsupportedFormat, fmt::format("{}: maxval {} (only 255 supported)", what, maxval));
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw Error(ErrorKind::CorruptFile, what + ": truncated header");
  ++pos;

  Frame frame(width, height, channels);
  if (bytes.size() - pos < frame.data.size()) {
    throw Error(ErrorKind::CorruptFile,
                fmt::format("{}: expected {} raster bytes, found {}", what, frame.data.size(), bytes.size() - pos));
  }
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), frame.data.size(), frame.data.begin());
  return frame;
}

std::vector<std::uint8_t> encode_pnm(const Frame& frame) {
  if (frame.channels != 1 && frame.channels != 3) {
    throw Error(ErrorKind::UnsupportedFormat, fmt::format("cannot encode {}-channel frame", frame.channels));
  }
  const std::string header = fmt::format("P{}\n{} {}\n255\n", frame.channels == 1 ? 5 : 6, frame.width, frame.height);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), frame.data.begin(), frame.data.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  const auto size = in.tellg();
  if (size < 0) throw Error(ErrorKind::IoError, "cannot size " + path.string());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (in.gcount() != size) throw Error(ErrorKind::IoError, "short read from " + path.string());
  return bytes;
}

void write_file_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

void write_text_file(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text_file(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

Frame read_pnm(const fs::path& path) { return decode_pnm(read_file_bytes(path), path.string()); }

void write_pnm(const Frame& frame, const fs::path& path) { write_file_bytes(path, encode_pnm(frame)); }

std::vector<std::pair<long, fs::path>> list_numbered_files(const fs::path& directory,
                                                           const std::vector<std::string>& extensions) {
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) throw Error(ErrorKind::IoError, "not a directory: " + directory.string());
  std::vector<std::pair<long, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (std::find(extensions.begin(), extensions.end(), ext) == extensions.end()) continue;
    const auto stem = entry.path().stem().string();
    if (!is_numeric_stem(stem)) continue;
    found.emplace_back(std::stol(stem), entry.path());
  }
  std::sort(found.begin(), found.end());
  return found;
}

std::string frame_filename(std::size_t index, const std::string& extension) {
  return fmt::format("{:06d}{}", index, extension);
}

FrameSequence load_sequence(const fs::path& directory, double fps) {
  const auto numbered = list_numbered_files(directory, {".pgm", ".ppm"});
  if (numbered.empty()) throw Error(ErrorKind::EmptyDirectory, "no .pgm/.ppm frames in " + directory.string());

  FrameSequence seq;
  seq.directory = directory;
  seq.fps = fps;
  seq.first_index = numbered.front().first;
  for (std::size_t i = 0; i < numbered.size(); ++i) {
    if (numbered[i].first != seq.first_index + static_cast<long>(i)) {
      throw Error(ErrorKind::MissingFrame,
                  fmt::format("frame {} missing in {}", seq.first_index + static_cast<long>(i), directory.string()));
    }
    seq.files.push_back(numbered[i].second);
  }
  seq.frame_count = seq.files.size();

  const Frame first = read_pnm(seq.files.front());
  seq.width = first.width;
  seq.height = first.height;
  seq.channels = first.channels;
  for (std::size_t i = 1; i < seq.files.size(); ++i) {
    const auto bytes = read_file_bytes(seq.files[i]);
    const Frame f = decode_pnm(bytes, seq.files[i].string());
    if (f.width != seq.width || f.height != seq.height || f.channels != seq.channels) {
      throw Error(ErrorKind::DimensionMismatch,
                  fmt::format("{} is {}x{}x{}, sequence is {}x{}x{}", seq.files[i].string(), f.width, f.height,
                              f.channels, seq.width, seq.height, seq.channels));
    }
  }
  return seq;
}

Frame read_frame(const FrameSequence& seq, std::size_t index) {
  if (index >= seq.frame_count) {
    throw Error(ErrorKind::IndexOutOfRange, fmt::format("frame {} of {}", index, seq.frame_count));
  }
  Frame f = read_pnm(seq.files[index]);
  if (f.width != seq.width || f.height != seq.height || f.channels != seq.channels) {
    throw Error(ErrorKind::DimensionMismatch, seq.files[index].string() + " changed since load");
  }
  return f;
}

std::vector<Frame> read_luminance_frames(const FrameSequence& seq) {
  std::vector<Frame> frames;
  frames.reserve(seq.frame_count);
  for (std::size_t i = 0; i < seq.frame_count; ++i) frames.push_back(to_luminance(read_frame(seq, i)));
  return frames;
}

Frame to_luminance(const Frame& frame) {
  if (frame.channels == 1) return frame;
  if (frame.channels != 3) {
    throw Error(ErrorKind::UnsupportedFormat, fmt::format("{}-channel frame", frame.channels));
  }
  Frame out(frame.width, frame.height, 1);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double y = 0.299 * frame.data[3 * i] + 0.587 * frame.data[3 * i + 1] + 0.114 * frame.data[3 * i + 2];
    out.data[i] = static_cast<std::uint8_t>(std::clamp(std::round(y), 0.0, 255.0));
  }
  return out;
}

void write_mask(const BinaryMask& mask, const fs::path& path) {
  if (mask.width < 1 || mask.height < 1 || mask.labels.size() != mask.pixel_count()) {
    throw Error(ErrorKind::DimensionMismatch, "invalid mask dimensions");
  }
  Frame f(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = mask.labels[i] ? 255 : 0;
  write_pnm(f, path);
}

BinaryMask read_mask(const fs::path& path) {
  const Frame f = to_luminance(read_pnm(path));
  BinaryMask mask(f.width, f.height);
  for (std::size_t i = 0; i < f.data.size(); ++i) mask.labels[i] = f.data[i] >= 128 ? 1 : 0;
  return mask;
}

std::uint64_t directory_bytes(const FrameSequence& seq) {
  std::uint64_t total = 0;
  for (const auto& f : seq.files) total += fs::file_size(f);
  return total;
}

std::string SequenceStats::duration() const {
  const auto total = static_cast<long long>(std::floor(static_cast<double>(frames) / fps));
  return fmt::format("{:02d}:{:02d}", total / 60, total % 60);
}

std::string SequenceStats::size_mb() const { return fmt::format("{:.1f}", static_cast<double>(size_bytes) / 1e6); }

SequenceStats sequence_stats(const FrameSequence& seq, double wall_seconds) {
  return SequenceStats{seq.frame_count, seq.fps, directory_bytes(seq), std::max(0.0, wall_seconds)};
}

}  // namespace motiontrim
