#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "motiontrim/adnn.hpp"
#include "motiontrim/anomaly_mil.hpp"
#include "motiontrim/frame_io.hpp"
#include "motiontrim/histogram.hpp"
#include "motiontrim/refinement.hpp"
#include "motiontrim/trimmer.hpp"

namespace motiontrim {

struct PipelineConfig {
  std::filesystem::path input;         // frame directory
  std::filesystem::path ground_truth;  // truth masks, numbered like the input
  std::filesystem::path output;        // output root
  std::filesystem::path mil_weights;   // trained scorer (optional if mil_bags is set)
  std::filesystem::path mil_bags;      // bag list for train-mil: `positive|negative <features.csv>` per line

  std::uint64_t seed = 1;
  double fps = 30.0;

  TemporalWindow window{100};
  std::size_t samples = 2000;
  AdnnArchitecture arch;
  TrainConfig train;
  double infer_threshold = 0.5;
  bool refine_enabled = true;
  RefineParams refine;
  TrimConfig trim;
  MilParams mil;
  int segments = kDefaultSegments;
};

/// `key = value` lines with dotted keys; '#' starts a comment. Unknown keys,
/// malformed values and out-of-range values raise ConfigError naming the key.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies `key=value`.
void apply_override(PipelineConfig& config, const std::string& assignment);
void validate_config(const PipelineConfig& config);
/// Every key in a fixed order; the basis of the config hash.
std::string canonical_config(const PipelineConfig& config);
std::vector<std::string> config_keys();

std::string sha256_hex(const std::string& data);
/// Hash of every regular file in a directory (names and bytes, sorted by
/// name), excluding the manifest and the timing report.
std::string hash_directory(const std::filesystem::path& dir);
std::string hash_file(const std::filesystem::path& path);

inline constexpr const char* kManifestName = "manifest.txt";

/// Stage bookkeeping: decides whether a stage may be skipped and records what
/// produced each output directory.
class StageRunner {
 public:
  explicit StageRunner(const PipelineConfig& config);

  const std::string& config_hash() const { return config_hash_; }

  /// True if `dir` holds a manifest for this stage with matching config and
  /// input hashes, its outputs still hash to the recorded value, and none of
  /// `depends_on` executed during this invocation.
  bool up_to_date(const std::string& stage, const std::filesystem::path& dir, const std::string& input_hash,
                  const std::vector<std::string>& depends_on = {}) const;
  void write_manifest(const std::string& stage, const std::filesystem::path& dir, const std::string& input_hash,
                      const std::vector<std::string>& extra_lines = {}) const;
  void mark_executed(const std::string& stage) { executed_.push_back(stage); }
  bool executed(const std::string& stage) const;
  const std::vector<std::string>& executed() const { return executed_; }

 private:
  std::string config_hash_;
  std::vector<std::string> executed_;
};

struct StageReport {
  std::string stage;
  SequenceStats stats;  // the scored sequence, wall_seconds = stage CPU time
};

std::string report_text(const StageReport& report);
StageReport parse_report(const std::string& text);

/// One table row: `Duration | Size (MB) | Frames | Anomaly Detection (sec)`.
/// Seconds print as integers from 10 s upward and with two decimals below.
std::string format_report_row(const SequenceStats& stats);
std::string report_header();
std::string cmd_report(const std::vector<StageReport>& reports);

/// Exclusive lock on an output root, released on destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& root);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

void log_line(const char* level, const std::string& stage, const std::string& message);

struct StagePaths {
  std::filesystem::path bg;             // checkpoint.txt, loss.csv
  std::filesystem::path masks;          // NNNNNN.pgm per eligible frame
  std::filesystem::path trimmed;        // trimmed frames + map.txt
  std::filesystem::path mil;            // weights.bin when trained by the pipeline
  std::filesystem::path score_full;
  std::filesystem::path score_trimmed;

  explicit StagePaths(const std::filesystem::path& root);
};

/// Each stage returns its output location. `runner` may be null for a
/// standalone invocation (no upstream chain).
std::filesystem::path cmd_train_bg(const PipelineConfig& config, StageRunner* runner = nullptr);
std::filesystem::path cmd_infer(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                                StageRunner* runner = nullptr);
std::filesystem::path cmd_trim(const PipelineConfig& config, const std::filesystem::path& mask_dir,
                               StageRunner* runner = nullptr);
std::filesystem::path cmd_train_mil(const PipelineConfig& config, StageRunner* runner = nullptr);

struct ScoreOutcome {
  ScoreSeries scores;
  StageReport report;
};

ScoreOutcome cmd_score(const PipelineConfig& config, const std::filesystem::path& sequence_dir,
                       const std::filesystem::path& weights, const std::filesystem::path& out_dir,
                       const std::string& stage = "score", StageRunner* runner = nullptr);

struct E2eResult {
  std::vector<std::string> executed;  // stages that ran (others were skipped)
  double correlation = 0.0;
  std::string report;
};

E2eResult cmd_e2e(const PipelineConfig& config);

}  // namespace motiontrim
