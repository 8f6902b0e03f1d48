#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "motiontrim/error.hpp"
#include "motiontrim/frame_io.hpp"
#include "motiontrim/pipeline.hpp"
#include "motiontrim/synthetic.hpp"

using namespace motiontrim;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "config file (key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", c.sets, "override, key=value (repeatable)")->allow_extra_args(false);
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig config = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  for (const auto& s : c.sets) apply_override(config, s);
  validate_config(config);
  return config;
}

void require_output(const PipelineConfig& config) {
  if (config.output.empty()) throw Error(ErrorKind::ConfigError, "paths.output is required");
}

// Demo workspace: a 64x64 scene with a square that moves only in frames
// 100-199, truth masks for ten of them, and a bag list for the scorer.
void write_demo(const fs::path& dir) {
  fs::create_directories(dir);
  SceneConfig sc;
  sc.frames = 320;
  sc.square = 20;
  sc.motion_start = 100;
  sc.motion_end = 200;
  sc.peak_speed = 4.0;
  const SyntheticScene scene = make_scene(sc);
  std::vector<std::size_t> labeled;
  for (std::size_t f = 105; f < 200; f += 10) labeled.push_back(f);
  write_scene(scene, dir / "frames", dir / "truth", labeled);

  const auto bags = make_motion_bags(16, 16, 901);
  std::string list;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    const std::string name = fmt::format("bags/bag{:02d}.csv", i);
    fs::create_directories(dir / "bags");
    write_text_file(dir / name, features_text(bags[i].features));
    list += fmt::format("{} {}\n", bags[i].polarity == Polarity::Positive ? "positive" : "negative", name);
  }
  write_text_file(dir / "bags.txt", list);
  write_text_file(dir / "demo.conf",
                  "paths.input = frames\n"
                  "paths.ground_truth = truth\n"
                  "paths.output = run\n"
                  "paths.mil_bags = bags.txt\n"
                  "seed = 11\n"
                  "features.window = 50\n"
                  "features.samples = 2000\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"motiontrim: trim static stretches out of a frame sequence, then score what is left"};
  app.require_subcommand(1);

  Common common;
  std::function<void()> action;

  auto* train_bg = app.add_subcommand("train-bg", "train the background model on the truth masks");
  add_common(train_bg, common);
  train_bg->callback([&] {
    action = [&] {
      const auto config = resolve(common);
      require_output(config);
      OutputLock lock(config.output);
      fmt::print("{}\n", cmd_train_bg(config).string());
    };
  });

  std::string checkpoint;
  auto* infer = app.add_subcommand("infer", "predict and refine a mask for every eligible frame");
  add_common(infer, common);
  infer->add_option("--checkpoint", checkpoint, "model checkpoint (default <output>/bg/checkpoint.txt)");
  infer->callback([&] {
    action = [&] {
      const auto config = resolve(common);
      require_output(config);
      OutputLock lock(config.output);
      const fs::path ckpt = checkpoint.empty() ? StagePaths(config.output).bg / "checkpoint.txt" : fs::path(checkpoint);
      fmt::print("{}\n", cmd_infer(config, ckpt).string());
    };
  });

  std::string masks;
  auto* trim = app.add_subcommand("trim", "keep frames whose foreground ratio reaches the threshold");
  add_common(trim, common);
  trim->add_option("--masks", masks, "mask directory (default <output>/masks)");
  trim->callback([&] {
    action = [&] {
      const auto config = resolve(common);
      require_output(config);
      OutputLock lock(config.output);
      fmt::print("{}\n", cmd_trim(config, masks.empty() ? StagePaths(config.output).masks : fs::path(masks)).string());
    };
  });

  auto* train_mil = app.add_subcommand("train-mil", "train the segment scorer from paths.mil_bags");
  add_common(train_mil, common);
  train_mil->callback([&] {
    action = [&] {
      const auto config = resolve(common);
      require_output(config);
      OutputLock lock(config.output);
      fmt::print("{}\n", cmd_train_mil(config).string());
    };
  });

  std::string sequence, weights, out;
  auto* score = app.add_subcommand("score", "score a frame sequence segment by segment");
  add_common(score, common);
  score->add_option("--sequence", sequence, "frame directory (default paths.input)");
  score->add_option("--weights", weights, "scorer weights (default paths.mil_weights, else <output>/mil/weights.bin)");
  score->add_option("--out", out, "output directory (default <output>/score)");
  score->callback([&] {
    action = [&] {
      const auto config = resolve(common);
      fs::path w = weights;
      if (w.empty()) w = config.mil_weights;
      if (w.empty() && !config.output.empty()) w = StagePaths(config.output).mil / "weights.bin";
      if (w.empty()) throw Error(ErrorKind::ConfigError, "no weights: pass --weights or set paths.mil_weights");
      const fs::path seq = sequence.empty() ? config.input : fs::path(sequence);
      if (seq.empty()) throw Error(ErrorKind::ConfigError, "no sequence: pass --sequence or set paths.input");
      if (out.empty()) require_output(config);
      const fs::path dir = out.empty() ? config.output / "score" : fs::path(out);
      const auto outcome = cmd_score(config, seq, w, dir);
      fmt::print("{}\n{}\n", report_header(), format_report_row(outcome.report.stats));
    };
  });

  std::vector<std::string> reports;
  auto* report = app.add_subcommand("report", "print the timing table from stage report files");
  add_common(report, common);
  report->add_option("reports", reports, "report.txt files (default the two e2e score reports)");
  report->callback([&] {
    action = [&] {
      std::vector<fs::path> files(reports.begin(), reports.end());
      if (files.empty()) {
        const auto config = resolve(common);
        require_output(config);
        const StagePaths paths(config.output);
        files = {paths.score_full / "report.txt", paths.score_trimmed / "report.txt"};
      }
      std::vector<StageReport> parsed;
      for (const auto& f : files) parsed.push_back(parse_report(read_text_file(f)));
      fmt::print("{}", cmd_report(parsed));
    };
  });

  auto* e2e = app.add_subcommand("e2e", "run every stage, skipping the ones that are up to date");
  add_common(e2e, common);
  e2e->callback([&] {
    action = [&] {
      const auto result = cmd_e2e(resolve(common));
      fmt::print("executed: {}\nspearman {:.4f}\n{}", result.executed.empty() ? "(none)" : fmt::format("{}", fmt::join(result.executed, " ")),
                 result.correlation, result.report);
    };
  });

  std::string demo_dir;
  auto* synth = app.add_subcommand("synth", "write a synthetic demo workspace");
  synth->add_option("dir", demo_dir, "target directory")->required();
  synth->callback([&] {
    action = [&] {
      write_demo(demo_dir);
      fmt::print("{}\n", (fs::path(demo_dir) / "demo.conf").string());
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    action();
  } catch (const Error& e) {
    log_line("ERROR", "cli", e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    log_line("ERROR", "cli", e.what());
    return 3;
  }
  return 0;
}
