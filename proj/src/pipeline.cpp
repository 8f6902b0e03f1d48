#include "motiontrim/pipeline.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <ctime>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "motiontrim/error.hpp"

namespace motiontrim {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

namespace {

std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorKind::ConfigError, fmt::format("{}: '{}' is not {}", key, value, expected));
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || r.ec != std::errc() || r.ptr != value.data() + value.size() || !std::isfinite(v)) {
    bad_value(key, value, "a number");
  }
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || r.ec != std::errc() || r.ptr != value.data() + value.size()) bad_value(key, value, "an integer");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || r.ec != std::errc() || r.ptr != value.data() + value.size()) {
    bad_value(key, value, "a non-negative integer");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "a boolean");
}

struct KeyDef {
  const char* name;
  std::function<void(PipelineConfig&, const std::string&, const fs::path&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return (p.is_relative() && !base.empty()) ? base / p : p;
}

#define MT_PATH_KEY(key, field)                                                                    \
  KeyDef {                                                                                         \
    key, [](PipelineConfig& c, const std::string& v, const fs::path& b) { c.field = resolve(b, v); }, \
        [](const PipelineConfig& c) { return c.field.string(); }                                   \
  }
#define MT_NUM_KEY(key, field, conv)                                                                         \
  KeyDef {                                                                                                   \
    key, [](PipelineConfig& c, const std::string& v, const fs::path&) { c.field = static_cast<decltype(c.field)>(conv(key, v)); }, \
        [](const PipelineConfig& c) { return fmt::format("{}", c.field); }                                   \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      MT_PATH_KEY("paths.input", input),
      MT_PATH_KEY("paths.ground_truth", ground_truth),
      MT_PATH_KEY("paths.output", output),
      MT_PATH_KEY("paths.mil_weights", mil_weights),
      MT_PATH_KEY("paths.mil_bags", mil_bags),
      MT_NUM_KEY("seed", seed, to_u64),
      MT_NUM_KEY("sequence.fps", fps, to_double),
      MT_NUM_KEY("features.window", window.length, to_int),
      MT_NUM_KEY("features.bins", arch.bins, to_int),
      MT_NUM_KEY("features.samples", samples, to_u64),
      MT_NUM_KEY("adnn.sum_kernels", arch.sum_kernels, to_int),
      MT_NUM_KEY("adnn.product_kernels", arch.product_kernels, to_int),
      MT_NUM_KEY("adnn.hidden", arch.hidden, to_int),
      MT_NUM_KEY("train.learning_rate", train.learning_rate, to_double),
      MT_NUM_KEY("train.epochs", train.epochs, to_int),
      MT_NUM_KEY("train.batch_size", train.batch_size, to_int),
      MT_NUM_KEY("train.momentum", train.momentum, to_double),
      MT_NUM_KEY("infer.threshold", infer_threshold, to_double),
      MT_NUM_KEY("infer.refine", refine_enabled, to_bool),
      MT_NUM_KEY("refine.sigma_spatial", refine.sigma_spatial, to_double),
      MT_NUM_KEY("refine.sigma_color", refine.sigma_color, to_double),
      MT_NUM_KEY("refine.radius", refine.radius, to_int),
      MT_NUM_KEY("refine.max_iters", refine.max_iters, to_int),
      MT_NUM_KEY("refine.min_flips", refine.min_flips, to_int),
      MT_NUM_KEY("trim.threshold", trim.threshold, to_double),
      MT_NUM_KEY("trim.padding", trim.padding, to_int),
      MT_NUM_KEY("mil.segments", segments, to_int),
      MT_NUM_KEY("mil.lambda1", mil.lambda1, to_double),
      MT_NUM_KEY("mil.lambda2", mil.lambda2, to_double),
      MT_NUM_KEY("mil.learning_rate", mil.learning_rate, to_double),
      MT_NUM_KEY("mil.epochs", mil.epochs, to_int),
      MT_NUM_KEY("mil.hidden1", mil.hidden1, to_int),
      MT_NUM_KEY("mil.hidden2", mil.hidden2, to_int),
  };
  return table;
}

#undef MT_PATH_KEY
#undef MT_NUM_KEY

void set_key(PipelineConfig& config, const std::string& key, const std::string& value, const fs::path& base) {
  const auto& table = key_table();
  const auto it = std::find_if(table.begin(), table.end(), [&](const KeyDef& d) { return key == d.name; });
  if (it == table.end()) throw Error(ErrorKind::ConfigError, fmt::format("unknown key '{}'", key));
  it->set(config, value, base);
}

void require(bool ok, const char* key, const char* rule) {
  if (!ok) throw Error(ErrorKind::ConfigError, fmt::format("{} must be {}", key, rule));
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& d : key_table()) keys.emplace_back(d.name);
  return keys;
}

void validate_config(const PipelineConfig& c) {
  require(c.fps > 0.0, "sequence.fps", "> 0");
  require(c.window.length >= 1, "features.window", ">= 1");
  require(c.arch.bins >= 3 && c.arch.bins % 2 == 1, "features.bins", "odd and >= 3");
  require(c.samples >= 1, "features.samples", ">= 1");
  require(c.arch.sum_kernels >= 0 && c.arch.product_kernels >= 0 && c.arch.channels() >= 1, "adnn.sum_kernels",
          "non-negative, with at least one kernel in total");
  require(c.arch.hidden >= 1, "adnn.hidden", ">= 1");
  require(c.train.learning_rate > 0.0, "train.learning_rate", "> 0");
  require(c.train.epochs >= 1, "train.epochs", ">= 1");
  require(c.train.batch_size >= 1, "train.batch_size", ">= 1");
  require(c.train.momentum >= 0.0 && c.train.momentum < 1.0, "train.momentum", "in [0, 1)");
  require(c.infer_threshold >= 0.0 && c.infer_threshold <= 1.0, "infer.threshold", "in [0, 1]");
  require(c.refine.sigma_spatial > 0.0, "refine.sigma_spatial", "> 0");
  require(c.refine.sigma_color > 0.0, "refine.sigma_color", "> 0");
  require(c.refine.radius >= 1, "refine.radius", ">= 1");
  require(c.refine.max_iters >= 1, "refine.max_iters", ">= 1");
  require(c.refine.min_flips >= 0, "refine.min_flips", ">= 0");
  require(c.trim.threshold >= 0.0 && c.trim.threshold <= 1.0, "trim.threshold", "in [0, 1]");
  require(c.trim.padding >= 0, "trim.padding", ">= 0");
  require(c.segments >= 2, "mil.segments", ">= 2");
  require(c.mil.lambda1 >= 0.0, "mil.lambda1", ">= 0");
  require(c.mil.lambda2 >= 0.0, "mil.lambda2", ">= 0");
  require(c.mil.learning_rate > 0.0, "mil.learning_rate", "> 0");
  require(c.mil.epochs >= 1, "mil.epochs", ">= 1");
  require(c.mil.hidden1 >= 1, "mil.hidden1", ">= 1");
  require(c.mil.hidden2 >= 1, "mil.hidden2", ">= 1");
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim_ws(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ConfigError, fmt::format("line {}: expected 'key = value'", line_no));
    }
    set_key(config, trim_ws(line.substr(0, eq)), trim_ws(line.substr(eq + 1)), base_dir);
  }
  validate_config(config);
  return config;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error&) {
    throw Error(ErrorKind::ConfigError, "cannot read config " + path.string());
  }
  return parse_config(text, path.parent_path());
}

void apply_override(PipelineConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorKind::ConfigError, fmt::format("override '{}' is not key=value", assignment));
  }
  set_key(config, trim_ws(assignment.substr(0, eq)), trim_ws(assignment.substr(eq + 1)), {});
  validate_config(config);
}

std::string canonical_config(const PipelineConfig& config) {
  std::string out;
  for (const auto& d : key_table()) {
    // Where outputs go does not change what they contain.
    if (std::string_view(d.name) == "paths.output") continue;
    out += fmt::format("{} = {}\n", d.name, d.get(config));
  }
  return out;
}

// ---------------------------------------------------------------- hashing

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "sha256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string hash_file(const fs::path& path) { return sha256_hex(read_text_file(path)); }

std::string hash_directory(const fs::path& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::IoError, "not a directory: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name != kManifestName && name != "report.txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& f : files) acc += f.filename().string() + " " + hash_file(f) + "\n";
  return sha256_hex(acc);
}

// ---------------------------------------------------------------- stages

StageRunner::StageRunner(const PipelineConfig& config) : config_hash_(sha256_hex(canonical_config(config))) {}

bool StageRunner::executed(const std::string& stage) const {
  return std::find(executed_.begin(), executed_.end(), stage) != executed_.end();
}

bool StageRunner::up_to_date(const std::string& stage, const fs::path& dir, const std::string& input_hash,
                             const std::vector<std::string>& depends_on) const {
  for (const auto& dep : depends_on) {
    if (executed(dep)) return false;
  }
  std::error_code ec;
  if (!fs::is_regular_file(dir / kManifestName, ec)) return false;
  std::istringstream in(read_text_file(dir / kManifestName));
  std::string line;
  std::string m_stage, m_config, m_input, m_output;
  while (std::getline(in, line)) {
    const auto sp = line.find(' ');
    if (sp == std::string::npos) continue;
    const auto key = line.substr(0, sp);
    const auto value = line.substr(sp + 1);
    if (key == "stage") m_stage = value;
    if (key == "config_hash") m_config = value;
    if (key == "input_hash") m_input = value;
    if (key == "output_hash") m_output = value;
  }
  return m_stage == stage && m_config == config_hash_ && m_input == input_hash && m_output == hash_directory(dir);
}

void StageRunner::write_manifest(const std::string& stage, const fs::path& dir, const std::string& input_hash,
                                 const std::vector<std::string>& extra_lines) const {
  std::string text = fmt::format("stage {}\nconfig_hash {}\ninput_hash {}\noutput_hash {}\n", stage, config_hash_,
                                 input_hash, hash_directory(dir));
  for (const auto& l : extra_lines) text += l + "\n";
  write_text_file(dir / kManifestName, text);
}

void log_line(const char* level, const std::string& stage, const std::string& message) {
  std::cerr << level << ' ' << stage << ' ' << message << '\n';
}

StagePaths::StagePaths(const fs::path& root)
    : bg(root / "bg"),
      masks(root / "masks"),
      trimmed(root / "trimmed"),
      mil(root / "mil"),
      score_full(root / "score_full"),
      score_trimmed(root / "score_trimmed") {}

OutputLock::OutputLock(const fs::path& root) : path_(root / ".lock") {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + root.string());
  std::FILE* f = std::fopen(path_.c_str(), "wx");
  if (!f) {
    throw Error(ErrorKind::Locked,
                fmt::format("{} exists; another run owns this output root (delete it if stale)", path_.string()));
  }
  std::fclose(f);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

// Standalone invocations get a private runner so manifests are still written.
struct RunnerRef {
  explicit RunnerRef(const PipelineConfig& config, StageRunner* external)
      : local(config), runner(external ? external : &local) {}
  StageRunner local;
  StageRunner* runner;
};

void fresh_dir(const fs::path& dir) {
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void require_path(const fs::path& p, const char* key) {
  if (p.empty()) throw Error(ErrorKind::ConfigError, fmt::format("{} is not set", key));
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

}  // namespace

fs::path cmd_train_bg(const PipelineConfig& config, StageRunner* external) {
  const char* stage = "train-bg";
  require_path(config.input, "paths.input");
  require_path(config.ground_truth, "paths.ground_truth");
  require_path(config.output, "paths.output");
  std::error_code ec;
  if (!fs::is_directory(config.ground_truth, ec)) {
    throw Error(ErrorKind::ConfigError, "paths.ground_truth: not a directory: " + config.ground_truth.string());
  }
  RunnerRef ref(config, external);
  const fs::path dir = StagePaths(config.output).bg;
  const fs::path checkpoint = dir / "checkpoint.txt";
  const std::string input_hash = sha256_hex(hash_directory(config.input) + hash_directory(config.ground_truth));
  if (ref.runner->up_to_date(stage, dir, input_hash)) {
    log_line("INFO", stage, "up to date, skipped");
    return checkpoint;
  }

  const FrameSequence seq = load_sequence(config.input, config.fps);
  const std::vector<Frame> frames = read_luminance_frames(seq);
  std::vector<LabeledFrame> truth;
  for (const auto& [index, path] : list_numbered_files(config.ground_truth, {".pgm", ".ppm"})) {
    const long pos = index - seq.first_index;
    if (pos < 0 || pos >= static_cast<long>(seq.frame_count)) continue;
    truth.push_back({static_cast<std::size_t>(pos), read_mask(path)});
  }
  const SampleSet set =
      sample_training_set(frames, truth, config.samples, config.seed, config.window, config.arch.bins);
  if (set.insufficient_foreground) {
    log_line("WARN", stage, fmt::format("only {} foreground samples available", set.foreground));
  }
  log_line("INFO", stage, fmt::format("{} samples ({} fg, {} bg) from {} labeled frames", set.samples.size(),
                                      set.foreground, set.background, truth.size()));

  TrainConfig tc = config.train;
  tc.seed = config.seed + 2;
  const AdnnModel init = AdnnModel::initialized(config.arch, config.seed + 1);
  const TrainResult trained = train(init, set.samples, tc);
  log_line("INFO", stage, fmt::format("{} parameters, final loss {:.6f}", trained.model.parameter_count(),
                                      trained.loss_curve.back()));

  fresh_dir(dir);
  save_checkpoint(trained.model, checkpoint);
  std::string curve = "epoch,loss\n";
  for (std::size_t e = 0; e < trained.loss_curve.size(); ++e) {
    curve += fmt::format("{},{}\n", e + 1, trained.loss_curve[e]);
  }
  write_text_file(dir / "loss.csv", curve);
  ref.runner->write_manifest(stage, dir, input_hash,
                             {fmt::format("samples_foreground {}", set.foreground),
                              fmt::format("samples_background {}", set.background),
                              fmt::format("parameters {}", trained.model.parameter_count())});
  ref.runner->mark_executed(stage);
  return checkpoint;
}

fs::path cmd_infer(const PipelineConfig& config, const fs::path& checkpoint, StageRunner* external) {
  const char* stage = "infer";
  require_path(config.input, "paths.input");
  require_path(config.output, "paths.output");
  RunnerRef ref(config, external);
  const fs::path dir = StagePaths(config.output).masks;
  const std::string input_hash = sha256_hex(hash_file(checkpoint) + hash_directory(config.input));
  if (ref.runner->up_to_date(stage, dir, input_hash, {"train-bg"})) {
    log_line("INFO", stage, "up to date, skipped");
    return dir;
  }

  AdnnModel model;
  try {
    model = load_checkpoint(checkpoint);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::IoError) throw;
    throw Error(ErrorKind::CheckpointMismatch, e.what());
  }
  if (!(model.architecture() == config.arch)) {
    const auto& a = model.architecture();
    throw Error(ErrorKind::CheckpointMismatch,
                fmt::format("checkpoint is B={} K1={} K2={} H={}, config is B={} K1={} K2={} H={}", a.bins,
                            a.sum_kernels, a.product_kernels, a.hidden, config.arch.bins, config.arch.sum_kernels,
                            config.arch.product_kernels, config.arch.hidden));
  }
  const FrameSequence seq = load_sequence(config.input, config.fps);
  const std::vector<Frame> frames = read_luminance_frames(seq);
  const std::size_t first = static_cast<std::size_t>(config.window.length);
  if (frames.size() <= first) {
    throw Error(ErrorKind::InsufficientHistory,
                fmt::format("{} frames; need more than the {}-frame window", frames.size(), first));
  }

  fresh_dir(dir);
  for (std::size_t t = first; t < frames.size(); ++t) {
    BinaryMask mask = predict_mask(frames, t, model, config.window, config.infer_threshold);
    if (config.refine_enabled) mask = refine(mask, frames[t], config.refine);
    write_mask(mask, dir / frame_filename(t));
    if ((t - first + 1) % 50 == 0) log_line("INFO", stage, fmt::format("{}/{} frames", t - first + 1, frames.size() - first));
  }
  ref.runner->write_manifest(stage, dir, input_hash,
                             {fmt::format("skipped_frames 0 {}", first - 1),
                              fmt::format("mask_frames {} {}", first, frames.size() - 1),
                              fmt::format("refined {}", config.refine_enabled)});
  ref.runner->mark_executed(stage);
  return dir;
}

fs::path cmd_trim(const PipelineConfig& config, const fs::path& mask_dir, StageRunner* external) {
  const char* stage = "trim";
  require_path(config.input, "paths.input");
  require_path(config.output, "paths.output");
  RunnerRef ref(config, external);
  const fs::path dir = StagePaths(config.output).trimmed;
  const std::string input_hash = sha256_hex(hash_directory(mask_dir) + hash_directory(config.input));
  if (ref.runner->up_to_date(stage, dir, input_hash, {"infer"})) {
    log_line("INFO", stage, "up to date, skipped");
    return dir;
  }

  const FrameSequence seq = load_sequence(config.input, config.fps);
  const auto mask_files = list_numbered_files(mask_dir, {".pgm"});
  if (mask_files.empty()) throw Error(ErrorKind::EmptyDirectory, "no masks in " + mask_dir.string());
  const auto first = static_cast<std::size_t>(mask_files.front().first);
  std::vector<double> ratios;
  for (std::size_t i = 0; i < mask_files.size(); ++i) {
    if (mask_files[i].first != static_cast<long>(first + i)) {
      throw Error(ErrorKind::MissingFrame, fmt::format("mask for frame {} missing", first + i));
    }
    ratios.push_back(foreground_ratio(read_mask(mask_files[i].second)));
  }
  if (first + ratios.size() > seq.frame_count) {
    throw Error(ErrorKind::InconsistentMap, "masks extend beyond the input sequence");
  }

  const TrimSegmentMap map = select_by_ratio(ratios, config.trim, first, seq.frame_count);
  std::error_code ec;
  if (map.total_kept == 0) {
    fs::remove_all(dir, ec);
    const auto max_it = std::max_element(ratios.begin(), ratios.end());
    throw Error(ErrorKind::EmptySelection,
                fmt::format("no frame reaches foreground ratio {}: {} masked frames, mean ratio {:.6f}, "
                            "max {:.6f} at frame {}",
                            config.trim.threshold, ratios.size(),
                            std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size()),
                            *max_it, first + static_cast<std::size_t>(max_it - ratios.begin())));
  }
  fresh_dir(dir);
  emit_trimmed(seq, map, dir);
  std::string ratio_text;
  for (std::size_t i = 0; i < ratios.size(); ++i) ratio_text += fmt::format("{} {:.6f}\n", first + i, ratios[i]);
  write_text_file(dir / "ratios.txt", ratio_text);
  log_line("INFO", stage, fmt::format("kept {} of {} frames in {} runs", map.total_kept, seq.frame_count,
                                      map.runs.size()));
  ref.runner->write_manifest(stage, dir, input_hash,
                             {fmt::format("total_kept {}", map.total_kept),
                              fmt::format("source_frames {}", seq.frame_count)});
  ref.runner->mark_executed(stage);
  return dir;
}

namespace {

std::vector<Bag> load_bag_list(const fs::path& list, int segments, std::string& hash_acc) {
  std::istringstream in(read_text_file(list));
  hash_acc += hash_file(list);
  std::vector<Bag> bags;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim_ws(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string polarity, file;
    ls >> polarity >> file;
    Bag bag;
    if (polarity == "positive") {
      bag.polarity = Polarity::Positive;
    } else if (polarity == "negative") {
      bag.polarity = Polarity::Negative;
    } else {
      throw Error(ErrorKind::ParseError, fmt::format("{}:{}: polarity must be positive or negative", list.string(), line_no));
    }
    const fs::path path = resolve(list.parent_path(), file);
    hash_acc += hash_file(path);
    bag.features = load_features(path, segments);
    bags.push_back(std::move(bag));
  }
  return bags;
}

}  // namespace

fs::path cmd_train_mil(const PipelineConfig& config, StageRunner* external) {
  const char* stage = "train-mil";
  require_path(config.mil_bags, "paths.mil_bags");
  require_path(config.output, "paths.output");
  RunnerRef ref(config, external);
  const fs::path dir = StagePaths(config.output).mil;
  const fs::path weights = dir / "weights.bin";
  std::string acc;
  const std::vector<Bag> bags = load_bag_list(config.mil_bags, config.segments, acc);
  const std::string input_hash = sha256_hex(acc);
  if (ref.runner->up_to_date(stage, dir, input_hash)) {
    log_line("INFO", stage, "up to date, skipped");
    return weights;
  }
  MilParams params = config.mil;
  params.seed = config.seed + 3;
  const MilTrainResult result = train_mil(bags, params);
  fresh_dir(dir);
  save_mil_weights(result.network, weights);
  std::string curve = "epoch,loss,hinge\n";
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
    curve += fmt::format("{},{},{}\n", e + 1, result.loss_history[e], result.hinge_history[e]);
  }
  write_text_file(dir / "loss.csv", curve);
  log_line("INFO", stage, fmt::format("{} bags, hinge {:.4f} -> {:.4f}", bags.size(), result.hinge_history.front(),
                                      result.hinge_history.back()));
  ref.runner->write_manifest(stage, dir, input_hash, {fmt::format("bags {}", bags.size())});
  ref.runner->mark_executed(stage);
  return weights;
}

// ---------------------------------------------------------------- reports

std::string report_text(const StageReport& r) {
  return fmt::format("stage {}\nframes {}\nfps {}\nsize_bytes {}\nwall_seconds {}\n", r.stage, r.stats.frames,
                     r.stats.fps, r.stats.size_bytes, r.stats.wall_seconds);
}

StageReport parse_report(const std::string& text) {
  StageReport r;
  std::istringstream in(text);
  std::string key;
  int seen = 0;
  while (in >> key) {
    if (key == "stage") {
      in >> r.stage;
    } else if (key == "frames") {
      in >> r.stats.frames;
    } else if (key == "fps") {
      in >> r.stats.fps;
    } else if (key == "size_bytes") {
      in >> r.stats.size_bytes;
    } else if (key == "wall_seconds") {
      in >> r.stats.wall_seconds;
    } else {
      throw Error(ErrorKind::ParseError, "stage report: unknown field '" + key + "'");
    }
    if (!in) throw Error(ErrorKind::ParseError, "stage report: bad value for '" + key + "'");
    ++seen;
  }
  if (seen != 5) throw Error(ErrorKind::ParseError, "stage report: incomplete");
  return r;
}

std::string format_report_row(const SequenceStats& s) {
  const std::string seconds =
      s.wall_seconds >= 10.0 ? fmt::format("{:.0f}", s.wall_seconds) : fmt::format("{:.2f}", s.wall_seconds);
  return fmt::format("{} | {} | {} | {}", s.duration(), s.size_mb(), s.frames, seconds);
}

std::string report_header() { return "Duration (mm:ss) | Size (MB) | Frames | Anomaly Detection (cpu - sec)"; }

std::string cmd_report(const std::vector<StageReport>& reports) {
  std::string out = "# " + report_header() + "\n";
  for (const auto& r : reports) out += format_report_row(r.stats) + "\n";
  return out;
}

ScoreOutcome cmd_score(const PipelineConfig& config, const fs::path& sequence_dir, const fs::path& weights,
                       const fs::path& out_dir, const std::string& stage, StageRunner* external) {
  RunnerRef ref(config, external);
  const std::string input_hash = sha256_hex(hash_directory(sequence_dir) + hash_file(weights));
  const std::vector<std::string> deps =
      stage == "score-trimmed" ? std::vector<std::string>{"trim", "train-mil"} : std::vector<std::string>{"train-mil"};
  if (ref.runner->up_to_date(stage, out_dir, input_hash, deps)) {
    log_line("INFO", stage, "up to date, skipped");
    return {parse_scores_csv(read_text_file(out_dir / "scores.csv")), parse_report(read_text_file(out_dir / "report.txt"))};
  }

  const double start = cpu_seconds();
  const FrameSequence seq = load_sequence(sequence_dir, config.fps);
  if (seq.frame_count < static_cast<std::size_t>(config.segments)) {
    throw Error(ErrorKind::InsufficientFrames,
                fmt::format("{} frames cannot fill {} segments", seq.frame_count, config.segments));
  }
  const std::vector<Frame> frames = read_luminance_frames(seq);
  const SegmentFeatures features = video_features(frames, config.segments);
  const MilNetwork net = load_mil_weights(weights);
  fresh_dir(out_dir);
  write_text_file(out_dir / "features.csv", features_text(features));
  ScoreOutcome outcome;
  outcome.scores = score_video(features, net, out_dir / "scores");
  const double elapsed = cpu_seconds() - start;

  outcome.report = StageReport{stage, sequence_stats(seq, elapsed)};
  write_text_file(out_dir / "report.txt", report_text(outcome.report));
  log_line("INFO", stage, fmt::format("{} frames scored in {:.3f} cpu-s", seq.frame_count, elapsed));
  ref.runner->write_manifest(stage, out_dir, input_hash, {fmt::format("frames {}", seq.frame_count)});
  ref.runner->mark_executed(stage);
  return outcome;
}

E2eResult cmd_e2e(const PipelineConfig& config) {
  validate_config(config);
  require_path(config.output, "paths.output");
  if (config.mil_bags.empty()) require_path(config.mil_weights, "paths.mil_weights");
  OutputLock lock(config.output);
  StageRunner runner(config);
  const StagePaths paths(config.output);

  const fs::path checkpoint = cmd_train_bg(config, &runner);
  const fs::path masks = cmd_infer(config, checkpoint, &runner);
  const fs::path trimmed = cmd_trim(config, masks, &runner);
  const fs::path weights = config.mil_bags.empty() ? config.mil_weights : cmd_train_mil(config, &runner);
  const ScoreOutcome full = cmd_score(config, config.input, weights, paths.score_full, "score-full", &runner);
  const ScoreOutcome cut = cmd_score(config, trimmed, weights, paths.score_trimmed, "score-trimmed", &runner);

  E2eResult result;
  const TrimSegmentMap map = read_map(trimmed / kMapFileName);
  result.correlation = compare_graphs(full.scores, cut.scores, map, full.report.stats.frames);
  write_text_file(config.output / "compare.txt", fmt::format("spearman {:.6f}\n", result.correlation));
  log_line("INFO", "compare", fmt::format("spearman {:.4f}", result.correlation));

  result.report = cmd_report({full.report, cut.report});
  write_text_file(config.output / "report.txt", result.report);
  result.executed = runner.executed();
  return result;
}

}  // namespace motiontrim
