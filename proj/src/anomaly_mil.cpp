#include "motiontrim/anomaly_mil.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <sstream>

#include "motiontrim/error.hpp"
#include "motiontrim/frame_io.hpp"

namespace motiontrim {

namespace fs = std::filesystem;

std::vector<std::pair<std::size_t, std::size_t>> segment_video(std::size_t n_frames, int segments) {
  if (segments < 1) throw Error(ErrorKind::ConfigError, "segment count must be >= 1");
  const auto s = static_cast<std::size_t>(segments);
  if (n_frames < s) {
    throw Error(ErrorKind::InsufficientFrames, fmt::format("{} frames cannot fill {} segments", n_frames, segments));
  }
  const std::size_t base = n_frames / s;
  const std::size_t extra = n_frames % s;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  ranges.reserve(s);
  std::size_t start = 0;
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    ranges.emplace_back(start, start + len - 1);
    start += len;
  }
  return ranges;
}

std::vector<double> builtin_features(std::span<const Frame> frames, std::pair<std::size_t, std::size_t> range,
                                     std::span<const BinaryMask> masks) {
  const auto [first, last] = range;
  if (last >= frames.size() || first > last) {
    throw Error(ErrorKind::IndexOutOfRange, fmt::format("range [{}, {}] of {} frames", first, last, frames.size()));
  }
  if (last - first + 1 < 2) throw Error(ErrorKind::RangeTooShort, fmt::format("range [{}, {}] has one frame", first, last));
  if (!masks.empty() && masks.size() != frames.size()) {
    throw Error(ErrorKind::SizeMismatch, "masks must align with frames");
  }

  std::vector<double> feat(kBuiltinFeatureDim, 0.0);
  std::vector<double> pair_means;
  std::size_t total = 0;
  for (std::size_t t = first; t < last; ++t) {
    const Frame& a = frames[t];
    const Frame& b = frames[t + 1];
    if (a.data.size() != b.data.size() || a.channels != 1 || b.channels != 1) {
      throw Error(ErrorKind::DimensionMismatch, "builtin_features needs equally sized luminance frames");
    }
    std::size_t sum = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      const int d = std::abs(static_cast<int>(b.data[i]) - static_cast<int>(a.data[i]));
      sum += static_cast<std::size_t>(d);
      // bin = floor(d/255 * 16), clamped to 15
      feat[static_cast<std::size_t>(std::min(15, d * 16 / 255))] += 1.0;
    }
    total += a.data.size();
    pair_means.push_back(static_cast<double>(sum) / (255.0 * static_cast<double>(a.data.size())));
  }
  for (int k = 0; k < 16; ++k) feat[k] /= static_cast<double>(total);

  const double n = static_cast<double>(pair_means.size());
  const double mean = std::accumulate(pair_means.begin(), pair_means.end(), 0.0) / n;
  double var = 0.0;
  for (double m : pair_means) var += (m - mean) * (m - mean);
  feat[16] = mean;
  feat[17] = std::sqrt(var / n);
  feat[18] = *std::max_element(pair_means.begin(), pair_means.end());

  if (!masks.empty()) {
    double ratio = 0.0;
    for (std::size_t t = first; t <= last; ++t) {
      ratio += static_cast<double>(masks[t].foreground_count()) / static_cast<double>(masks[t].pixel_count());
    }
    feat[19] = ratio / static_cast<double>(last - first + 1);
  }
  return feat;
}

SegmentFeatures video_features(std::span<const Frame> frames, int segments, std::span<const BinaryMask> masks) {
  SegmentFeatures f;
  f.segments = segments;
  f.dims = kBuiltinFeatureDim;
  for (const auto& range : segment_video(frames.size(), segments)) {
    // A one-frame segment borrows its successor (or predecessor) so a difference exists.
    auto r = range;
    if (r.first == r.second) {
      if (r.second + 1 < frames.size()) {
        ++r.second;
      } else {
        --r.first;
      }
    }
    const auto row = builtin_features(frames, r, masks);
    f.values.insert(f.values.end(), row.begin(), row.end());
  }
  return f;
}

SegmentFeatures parse_features(const std::string& text, int expected_segments) {
  SegmentFeatures f;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw Error(ErrorKind::ParseError, fmt::format("line {}: bad value '{}'", line_no, cell));
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (f.segments == 0) {
      f.dims = static_cast<int>(row.size());
    } else if (static_cast<int>(row.size()) != f.dims) {
      throw Error(ErrorKind::RaggedRows, fmt::format("line {} has {} columns, expected {}", line_no, row.size(), f.dims));
    }
    f.values.insert(f.values.end(), row.begin(), row.end());
    ++f.segments;
  }
  if (f.segments < 2) throw Error(ErrorKind::ParseError, fmt::format("{} rows; need at least 2", f.segments));
  if (expected_segments > 0 && f.segments != expected_segments) {
    throw Error(ErrorKind::RaggedRows, fmt::format("{} rows, expected {}", f.segments, expected_segments));
  }
  return f;
}

SegmentFeatures load_features(const fs::path& path, int expected_segments) {
  return parse_features(read_text_file(path), expected_segments);
}

std::string features_text(const SegmentFeatures& features) {
  std::string out;
  for (int s = 0; s < features.segments; ++s) {
    const auto row = features.row(s);
    for (int d = 0; d < features.dims; ++d) out += fmt::format("{}{}", d ? "," : "", row[d]);
    out += '\n';
  }
  return out;
}

MilNetwork::MilNetwork(int dims, int hidden1, int hidden2) : dims_(dims), h1_(hidden1), h2_(hidden2) {
  if (dims < 1 || hidden1 < 1 || hidden2 < 1) {
    throw Error(ErrorKind::SizeMismatch, fmt::format("invalid scorer shape {}-{}-{}", dims, hidden1, hidden2));
  }
  params_.assign(offset_b3() + 1, 0.0);
}

MilNetwork MilNetwork::initialized(int dims, int hidden1, int hidden2, std::uint64_t seed) {
  MilNetwork net(dims, hidden1, hidden2);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t offset, std::size_t count, int fan_in, int fan_out) {
    std::uniform_real_distribution<double> u(-std::sqrt(6.0 / (fan_in + fan_out)), std::sqrt(6.0 / (fan_in + fan_out)));
    for (std::size_t i = 0; i < count; ++i) net.params_[offset + i] = u(rng);
  };
  fill(0, static_cast<std::size_t>(hidden1) * dims, dims, hidden1);
  fill(net.offset_w2(), static_cast<std::size_t>(hidden2) * hidden1, hidden1, hidden2);
  fill(net.offset_w3(), static_cast<std::size_t>(hidden2), hidden2, 1);
  return net;
}

namespace {

struct MilActivations {
  std::vector<double> a1;  // post-ReLU
  std::vector<double> a2;
  double logit = 0.0;
};

// Four partial sums break the add dependency chain; the order is fixed, so
// results stay reproducible.
double dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

void mil_forward(const MilNetwork& net, std::span<const double> x, MilActivations& act) {
  if (static_cast<int>(x.size()) != net.dims()) {
    throw Error(ErrorKind::SizeMismatch, fmt::format("scorer expects {} dims, got {}", net.dims(), x.size()));
  }
  const auto p = net.parameters();
  const int d = net.dims();
  act.a1.resize(net.hidden1());
  act.a2.resize(net.hidden2());
  for (int h = 0; h < net.hidden1(); ++h) {
    const double* w = p.data() + static_cast<std::size_t>(h) * d;
    const double s = p[net.offset_b1() + h] + dot(w, x.data(), d);
    act.a1[h] = s > 0.0 ? s : 0.0;
  }
  for (int h = 0; h < net.hidden2(); ++h) {
    const double* w = p.data() + net.offset_w2() + static_cast<std::size_t>(h) * net.hidden1();
    const double s = p[net.offset_b2() + h] + dot(w, act.a1.data(), net.hidden1());
    act.a2[h] = s > 0.0 ? s : 0.0;
  }
  act.logit = p[net.offset_b3()] + dot(p.data() + net.offset_w3(), act.a2.data(), net.hidden2());
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double MilNetwork::logit(std::span<const double> x) const {
  MilActivations act;
  mil_forward(*this, x, act);
  return act.logit;
}

double MilNetwork::score(std::span<const double> x) const { return logistic(logit(x)); }

void MilNetwork::accumulate_gradient(std::span<const double> x, double upstream, std::span<double> grads) const {
  MilActivations act;
  mil_forward(*this, x, act);
  const double s = logistic(act.logit);
  const double d_logit = upstream * s * (1.0 - s);
  const auto p = parameters();

  grads[offset_b3()] += d_logit;
  std::vector<double> d2(h2_, 0.0);
  for (int k = 0; k < h2_; ++k) {
    grads[offset_w3() + k] += d_logit * act.a2[k];
    d2[k] = act.a2[k] > 0.0 ? d_logit * p[offset_w3() + k] : 0.0;
  }
  std::vector<double> d1(h1_, 0.0);
  for (int h = 0; h < h2_; ++h) {
    if (d2[h] == 0.0) continue;
    grads[offset_b2() + h] += d2[h];
    const std::size_t row = offset_w2() + static_cast<std::size_t>(h) * h1_;
    for (int k = 0; k < h1_; ++k) {
      grads[row + k] += d2[h] * act.a1[k];
      d1[k] += d2[h] * p[row + k];
    }
  }
  for (int h = 0; h < h1_; ++h) {
    if (act.a1[h] <= 0.0 || d1[h] == 0.0) continue;
    grads[offset_b1() + h] += d1[h];
    const std::size_t row = static_cast<std::size_t>(h) * dims_;
    for (int k = 0; k < dims_; ++k) grads[row + k] += d1[h] * x[k];
  }
}

ScoreSeries score_forward(const SegmentFeatures& features, const MilNetwork& net) {
  if (features.dims != net.dims()) {
    throw Error(ErrorKind::SizeMismatch, fmt::format("features have {} dims, scorer expects {}", features.dims, net.dims()));
  }
  ScoreSeries scores(static_cast<std::size_t>(features.segments));
  MilActivations act;
  for (int s = 0; s < features.segments; ++s) {
    mil_forward(net, features.row(s), act);
    scores[s] = logistic(act.logit);
  }
  return scores;
}

double mil_hinge(std::span<const double> pos, std::span<const double> neg) {
  if (pos.size() != neg.size() || pos.empty()) {
    throw Error(ErrorKind::SizeMismatch, fmt::format("bag sizes {} vs {}", pos.size(), neg.size()));
  }
  return std::max(0.0, 1.0 - *std::max_element(pos.begin(), pos.end()) + *std::max_element(neg.begin(), neg.end()));
}

double mil_ranking_loss(std::span<const double> pos, std::span<const double> neg, double lambda1, double lambda2) {
  const double hinge = mil_hinge(pos, neg);
  double smooth = 0.0;
  for (std::size_t i = 0; i + 1 < pos.size(); ++i) smooth += (pos[i] - pos[i + 1]) * (pos[i] - pos[i + 1]);
  const double sparse = std::accumulate(pos.begin(), pos.end(), 0.0);
  return hinge + lambda1 * smooth + lambda2 * sparse;
}

MilTrainResult train_mil(std::span<const Bag> bags, const MilParams& params) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < bags.size(); ++i) (bags[i].polarity == Polarity::Positive ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorKind::MissingPolarity, fmt::format("{} positive and {} negative bags", pos.size(), neg.size()));
  }
  if (!(params.learning_rate > 0.0) || params.lambda1 < 0.0 || params.lambda2 < 0.0 || params.epochs < 0) {
    throw Error(ErrorKind::ConfigError, "invalid MIL parameters");
  }
  const int dims = bags.front().features.dims;
  const int segments = bags.front().features.segments;
  for (const auto& b : bags) {
    if (b.features.dims != dims || b.features.segments != segments) {
      throw Error(ErrorKind::SizeMismatch, "all bags must share segment count and feature dimension");
    }
  }

  MilTrainResult result;
  result.network = MilNetwork::initialized(dims, params.hidden1, params.hidden2, params.seed);
  MilNetwork& net = result.network;
  std::vector<double> grads(net.parameters().size());
  std::vector<double> accum(net.parameters().size(), 0.0);
  std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t steps = std::max(pos.size(), neg.size());

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    double epoch_loss = 0.0;
    double epoch_hinge = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      const Bag& p = bags[pos[step % pos.size()]];
      const Bag& n = bags[neg[step % neg.size()]];
      const ScoreSeries sp = score_forward(p.features, net);
      const ScoreSeries sn = score_forward(n.features, net);
      const double hinge = mil_hinge(sp, sn);
      const double loss = mil_ranking_loss(sp, sn, params.lambda1, params.lambda2);
      if (!std::isfinite(loss)) throw Error(ErrorKind::NonFiniteLoss, fmt::format("MIL loss {} in epoch {}", loss, epoch + 1));
      epoch_loss += loss;
      epoch_hinge += hinge;

      // d(loss)/d(score) per segment; the max picks its first maximizer.
      std::vector<double> dp(sp.size(), params.lambda2);
      std::vector<double> dn(sn.size(), 0.0);
      if (hinge > 0.0) {
        dp[static_cast<std::size_t>(std::max_element(sp.begin(), sp.end()) - sp.begin())] -= 1.0;
        dn[static_cast<std::size_t>(std::max_element(sn.begin(), sn.end()) - sn.begin())] += 1.0;
      }
      for (std::size_t i = 0; i + 1 < sp.size(); ++i) {
        const double d = 2.0 * params.lambda1 * (sp[i] - sp[i + 1]);
        dp[i] += d;
        dp[i + 1] -= d;
      }
      std::fill(grads.begin(), grads.end(), 0.0);
      for (int s = 0; s < segments; ++s) {
        if (dp[s] != 0.0) net.accumulate_gradient(p.features.row(s), dp[s], grads);
        if (dn[s] != 0.0) net.accumulate_gradient(n.features.row(s), dn[s], grads);
      }
      auto w = net.parameters();
      for (std::size_t k = 0; k < grads.size(); ++k) {
        accum[k] += grads[k] * grads[k];
        w[k] -= params.learning_rate * grads[k] / (std::sqrt(accum[k]) + 1e-8);
      }
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(steps));
    result.hinge_history.push_back(epoch_hinge / static_cast<double>(steps));
  }
  return result;
}

// One text header line, then the parameters as raw little-endian doubles.
// Loading is part of every scoring run, so it has to stay cheap.
std::string mil_weights_bytes(const MilNetwork& net) {
  static_assert(std::endian::native == std::endian::little, "weights are stored little-endian");
  std::string out = fmt::format("mil-weights 2 {} {} {} {}\n", net.dims(), net.hidden1(), net.hidden2(),
                                net.parameters().size());
  const auto params = net.parameters();
  const auto header = out.size();
  out.resize(header + params.size_bytes());
  std::memcpy(out.data() + header, params.data(), params.size_bytes());
  return out;
}

MilNetwork parse_mil_weights(const std::string& bytes) {
  const auto eol = bytes.find('\n');
  if (eol == std::string::npos) throw Error(ErrorKind::CheckpointMismatch, "MIL weights: missing header");
  std::istringstream in(bytes.substr(0, eol));
  std::string magic;
  long version = 0, d = 0, h1 = 0, h2 = 0, count = -1;
  if (!(in >> magic >> version >> d >> h1 >> h2 >> count) || magic != "mil-weights") {
    throw Error(ErrorKind::CheckpointMismatch, "MIL weights: bad header");
  }
  if (version != 2) throw Error(ErrorKind::CheckpointMismatch, fmt::format("unsupported MIL weights version {}", version));
  MilNetwork net;
  try {
    net = MilNetwork(static_cast<int>(d), static_cast<int>(h1), static_cast<int>(h2));
  } catch (const Error& e) {
    throw Error(ErrorKind::CheckpointMismatch, e.what());
  }
  auto params = net.parameters();
  if (count != static_cast<long>(params.size())) {
    throw Error(ErrorKind::CheckpointMismatch, "MIL weights parameter count mismatch");
  }
  if (bytes.size() - eol - 1 != params.size_bytes()) {
    throw Error(ErrorKind::CheckpointMismatch,
                fmt::format("MIL weights: {} payload bytes, expected {}", bytes.size() - eol - 1, params.size_bytes()));
  }
  std::memcpy(params.data(), bytes.data() + eol + 1, params.size_bytes());
  for (double p : params) {
    if (!std::isfinite(p)) throw Error(ErrorKind::CheckpointMismatch, "non-finite MIL weight");
  }
  return net;
}

void save_mil_weights(const MilNetwork& net, const fs::path& path) { write_text_file(path, mil_weights_bytes(net)); }

MilNetwork load_mil_weights(const fs::path& path) { return parse_mil_weights(read_text_file(path)); }

std::string scores_csv(const ScoreSeries& scores) {
  std::string out = "segment,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) out += fmt::format("{},{:.6f}\n", i, scores[i]);
  return out;
}

ScoreSeries parse_scores_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "segment,score") throw Error(ErrorKind::ParseError, "score CSV: missing header");
  ScoreSeries scores;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    std::size_t idx = 0;
    double v = 0.0;
    if (comma == std::string::npos) throw Error(ErrorKind::ParseError, "score CSV: bad row '" + line + "'");
    const auto r1 = std::from_chars(line.data(), line.data() + comma, idx);
    const auto r2 = std::from_chars(line.data() + comma + 1, line.data() + line.size(), v);
    if (r1.ec != std::errc() || r2.ec != std::errc() || idx != scores.size()) {
      throw Error(ErrorKind::ParseError, "score CSV: bad row '" + line + "'");
    }
    scores.push_back(v);
  }
  return scores;
}

std::string scores_svg(const ScoreSeries& scores) {
  constexpr double kW = 640, kH = 320, kLeft = 50, kRight = 20, kTop = 20, kBottom = 40;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  auto ypos = [&](double v) { return kTop + (1.0 - std::clamp(v, 0.0, 1.0)) * plot_h; };
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<line x1=\"{2}\" y1=\"{3}\" x2=\"{2}\" y2=\"{4}\" stroke=\"black\"/>\n"
      "<line x1=\"{2}\" y1=\"{4}\" x2=\"{5}\" y2=\"{4}\" stroke=\"black\"/>\n",
      kW, kH, kLeft, kTop, kTop + plot_h, kLeft + plot_w);
  for (double tick : {0.0, 0.5, 1.0}) {
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"black\"/>"
        "<text x=\"{3}\" y=\"{4:.2f}\" font-size=\"12\" text-anchor=\"end\">{5}</text>\n",
        kLeft - 5, ypos(tick), kLeft, kLeft - 8, ypos(tick) + 4, tick);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">segment</text>\n",
                     kLeft + plot_w / 2, kH - 10);
  out += "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"2\" points=\"";
  const double step = scores.size() > 1 ? plot_w / static_cast<double>(scores.size() - 1) : 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", kLeft + step * static_cast<double>(i), ypos(scores[i]));
  }
  out += "\"/>\n</svg>\n";
  return out;
}

ScoreSeries score_video(const SegmentFeatures& features, const MilNetwork& net, const fs::path& out_prefix) {
  ScoreSeries scores = score_forward(features, net);
  write_text_file(fs::path(out_prefix.string() + ".csv"), scores_csv(scores));
  write_text_file(fs::path(out_prefix.string() + ".svg"), scores_svg(scores));
  return scores;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::SizeMismatch, "spearman: length mismatch");
  if (a.size() < 2) return 0.0;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double compare_graphs(const ScoreSeries& full, const ScoreSeries& trimmed, const TrimSegmentMap& map,
                      std::size_t full_n_frames) {
  if (map.runs.empty() || map.runs.back().second >= full_n_frames) {
    throw Error(ErrorKind::InconsistentMap, fmt::format("map does not fit a {}-frame video", full_n_frames));
  }
  if (full.size() < 2 || trimmed.size() < 2 || map.total_kept < trimmed.size() || full_n_frames < full.size()) {
    throw Error(ErrorKind::InconsistentMap, "score series do not match the frame counts");
  }
  const auto full_segments = segment_video(full_n_frames, static_cast<int>(full.size()));
  const auto trimmed_segments = segment_video(map.total_kept, static_cast<int>(trimmed.size()));
  std::vector<double> paired(trimmed.size());
  for (std::size_t s = 0; s < trimmed_segments.size(); ++s) {
    const auto [a, b] = trimmed_segments[s];
    const std::size_t original = map_to_original(map, (a + b) / 2);
    const auto it = std::find_if(full_segments.begin(), full_segments.end(),
                                 [&](const auto& r) { return original >= r.first && original <= r.second; });
    paired[s] = full[static_cast<std::size_t>(it - full_segments.begin())];
  }
  return spearman(paired, trimmed);
}

}  // namespace motiontrim
