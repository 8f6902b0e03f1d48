#include "motiontrim/adnn.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "motiontrim/error.hpp"
#include "motiontrim/frame_io.hpp"

namespace motiontrim {

std::size_t AdnnArchitecture::parameter_count() const {
  const std::size_t b = static_cast<std::size_t>(bins);
  const std::size_t h = static_cast<std::size_t>(hidden);
  return static_cast<std::size_t>(channels()) * b + h * static_cast<std::size_t>(classifier_inputs()) + h + 2 * h + 2;
}

AdnnModel::AdnnModel(AdnnArchitecture arch) : arch_(arch) {
  validate_bin_count(arch.bins);
  if (arch.sum_kernels < 0 || arch.product_kernels < 0 || arch.channels() < 1 || arch.hidden < 1) {
    throw Error(ErrorKind::SizeMismatch, fmt::format("invalid architecture K1={} K2={} H={}", arch.sum_kernels,
                                                     arch.product_kernels, arch.hidden));
  }
  params_.assign(arch.parameter_count(), 0.0);
}

std::size_t AdnnModel::offset_w1() const { return static_cast<std::size_t>(arch_.channels()) * arch_.bins; }
std::size_t AdnnModel::offset_b1() const {
  return offset_w1() + static_cast<std::size_t>(arch_.hidden) * arch_.classifier_inputs();
}
std::size_t AdnnModel::offset_w2() const { return offset_b1() + arch_.hidden; }
std::size_t AdnnModel::offset_b2() const { return offset_w2() + 2 * static_cast<std::size_t>(arch_.hidden); }

std::span<double> AdnnModel::sum_kernel(int k) {
  return std::span<double>(params_).subspan(static_cast<std::size_t>(k) * arch_.bins, arch_.bins);
}
std::span<const double> AdnnModel::sum_kernel(int k) const {
  return std::span<const double>(params_).subspan(static_cast<std::size_t>(k) * arch_.bins, arch_.bins);
}
std::span<double> AdnnModel::product_kernel(int k) { return sum_kernel(arch_.sum_kernels + k); }
std::span<const double> AdnnModel::product_kernel(int k) const { return sum_kernel(arch_.sum_kernels + k); }
std::span<double> AdnnModel::w1() {
  return std::span<double>(params_).subspan(offset_w1(), offset_b1() - offset_w1());
}
std::span<const double> AdnnModel::w1() const {
  return std::span<const double>(params_).subspan(offset_w1(), offset_b1() - offset_w1());
}
std::span<double> AdnnModel::b1() { return std::span<double>(params_).subspan(offset_b1(), arch_.hidden); }
std::span<const double> AdnnModel::b1() const {
  return std::span<const double>(params_).subspan(offset_b1(), arch_.hidden);
}
std::span<double> AdnnModel::w2() { return std::span<double>(params_).subspan(offset_w2(), 2 * arch_.hidden); }
std::span<const double> AdnnModel::w2() const {
  return std::span<const double>(params_).subspan(offset_w2(), 2 * arch_.hidden);
}
std::span<double> AdnnModel::b2() { return std::span<double>(params_).subspan(offset_b2(), 2); }
std::span<const double> AdnnModel::b2() const { return std::span<const double>(params_).subspan(offset_b2(), 2); }

AdnnModel AdnnModel::initialized(AdnnArchitecture arch, std::uint64_t seed, double kernel_noise) {
  AdnnModel m(arch);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-kernel_noise, kernel_noise);
  const int c = center_bin(arch.bins);
  for (int k = 0; k < arch.sum_kernels; ++k) {
    auto w = m.sum_kernel(k);
    for (auto& v : w) v = noise(rng);
    w[c] += 1.0;
  }
  for (int k = 0; k < arch.product_kernels; ++k) {
    auto w = m.product_kernel(k);
    for (auto& v : w) v = noise(rng);
    w[arch.bins - 1] += 1.0;
  }
  const double a1 = std::sqrt(6.0 / (arch.classifier_inputs() + arch.hidden));
  std::uniform_real_distribution<double> init1(-a1, a1);
  for (auto& v : m.w1()) v = init1(rng);
  const double a2 = std::sqrt(6.0 / (arch.hidden + 2));
  std::uniform_real_distribution<double> init2(-a2, a2);
  for (auto& v : m.w2()) v = init2(rng);
  return m;
}

ClassProbs softmax2(double logit_bg, double logit_fg) {
  const double m = std::max(logit_bg, logit_fg);
  const double e_bg = std::exp(logit_bg - m);
  const double e_fg = std::exp(logit_fg - m);
  const double z = e_bg + e_fg;
  return {e_bg / z, e_fg / z};
}

void classifier_forward(std::span<const double> channels, const AdnnModel& model, AdnnActivations& act) {
  const auto& arch = model.architecture();
  const std::size_t n_in = static_cast<std::size_t>(arch.classifier_inputs());
  if (channels.size() != n_in) {
    throw Error(ErrorKind::SizeMismatch, fmt::format("classifier expects {} inputs, got {}", n_in, channels.size()));
  }
  const auto w1 = model.w1();
  const auto b1 = model.b1();
  act.hidden_pre.resize(arch.hidden);
  act.hidden.resize(arch.hidden);
  const std::size_t n_hidden = static_cast<std::size_t>(arch.hidden);
  double* pre = act.hidden_pre.data();
  std::copy(b1.begin(), b1.end(), pre);
  for (std::size_t k = 0; k < n_in; ++k) {
    const double v = channels[k];
    if (v == 0.0) continue;
    const double* col = w1.data() + k * n_hidden;
    for (std::size_t h = 0; h < n_hidden; ++h) pre[h] += col[h] * v;
  }
  for (int h = 0; h < arch.hidden; ++h) act.hidden[h] = pre[h] > 0.0 ? pre[h] : 0.0;
  const auto w2 = model.w2();
  const auto b2 = model.b2();
  for (int o = 0; o < 2; ++o) {
    double s = b2[o];
    for (int h = 0; h < arch.hidden; ++h) s += w2[static_cast<std::size_t>(o) * arch.hidden + h] * act.hidden[h];
    act.logits[o] = s;
  }
  act.probs = softmax2(act.logits[0], act.logits[1]);
}

ClassProbs classifier_forward(std::span<const double> channels, const AdnnModel& model) {
  AdnnActivations act;
  classifier_forward(channels, model, act);
  return act.probs;
}

void adnn_forward(std::span<const double> x, const AdnnModel& model, AdnnActivations& act) {
  const auto& arch = model.architecture();
  if (x.size() != static_cast<std::size_t>(arch.bins)) {
    throw Error(ErrorKind::SizeMismatch, fmt::format("model expects {} bins, got {}", arch.bins, x.size()));
  }
  act.channels.resize(static_cast<std::size_t>(arch.classifier_inputs()));
  std::span<double> out(act.channels);
  for (int k = 0; k < arch.sum_kernels; ++k) {
    sum_layer_forward(x, model.sum_kernel(k), out.subspan(static_cast<std::size_t>(k) * arch.bins, arch.bins));
  }
  for (int k = 0; k < arch.product_kernels; ++k) {
    product_layer_forward(x, model.product_kernel(k),
                          out.subspan(static_cast<std::size_t>(arch.sum_kernels + k) * arch.bins, arch.bins));
  }
  classifier_forward(act.channels, model, act);
}

ClassProbs adnn_forward(std::span<const double> x, const AdnnModel& model) {
  AdnnActivations act;
  adnn_forward(x, model, act);
  return act.probs;
}

double cross_entropy(const ClassProbs& probs, Label label) { return -std::log(std::max(probs[label], 1e-12)); }

double cross_entropy_from_logits(const double logits[2], Label label) {
  // -ln softmax = softplus(z_other - z_label)
  const double t = label == Label::Foreground ? logits[0] - logits[1] : logits[1] - logits[0];
  const double softplus = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  return std::min(softplus, -std::log(1e-12));
}

void adnn_backward(std::span<const double> x, const AdnnModel& model, const AdnnActivations& act, Label label,
                   std::span<double> grads, std::span<double> d_channels) {
  const auto& arch = model.architecture();
  const std::size_t n_in = static_cast<std::size_t>(arch.classifier_inputs());
  if (grads.size() != model.parameter_count()) {
    throw Error(ErrorKind::SizeMismatch, "gradient buffer does not match the model");
  }
  const std::size_t h_count = static_cast<std::size_t>(arch.hidden);

  // Softmax + cross-entropy (the 1e-12 floor only matters when the chosen
  // probability underflows; its gradient is taken as the unfloored one).
  const double y_fg = label == Label::Foreground ? 1.0 : 0.0;
  const double d_logit[2] = {act.probs.background - (1.0 - y_fg), act.probs.foreground - y_fg};

  auto gw2 = grads.subspan(model.offset_w2(), 2 * h_count);
  auto gb2 = grads.subspan(model.offset_b2(), 2);
  const auto w2 = model.w2();
  std::vector<double> d_hidden(arch.hidden, 0.0);
  for (int o = 0; o < 2; ++o) {
    gb2[o] += d_logit[o];
    for (int h = 0; h < arch.hidden; ++h) {
      gw2[static_cast<std::size_t>(o) * arch.hidden + h] += d_logit[o] * act.hidden[h];
      d_hidden[h] += w2[static_cast<std::size_t>(o) * arch.hidden + h] * d_logit[o];
    }
  }

  auto gw1 = grads.subspan(model.offset_w1(), h_count * n_in);
  auto gb1 = grads.subspan(model.offset_b1(), h_count);
  const auto w1 = model.w1();
  std::vector<double> d_in(n_in, 0.0);
  std::vector<double> d_pre(h_count, 0.0);
  for (std::size_t h = 0; h < h_count; ++h) {
    d_pre[h] = act.hidden_pre[h] > 0.0 ? d_hidden[h] : 0.0;
    gb1[h] += d_pre[h];
  }
  for (std::size_t k = 0; k < n_in; ++k) {
    const double v = act.channels[k];
    double* gcol = gw1.data() + k * h_count;
    const double* wcol = w1.data() + k * h_count;
    double acc = 0.0;
    for (std::size_t h = 0; h < h_count; ++h) {
      gcol[h] += d_pre[h] * v;
      acc += wcol[h] * d_pre[h];
    }
    d_in[k] = acc;
  }
  if (!d_channels.empty()) std::copy(d_in.begin(), d_in.end(), d_channels.begin());

  const std::span<const double> d_in_view(d_in);
  for (int k = 0; k < arch.sum_kernels; ++k) {
    accumulate_sum_kernel_grad(d_in_view.subspan(static_cast<std::size_t>(k) * arch.bins, arch.bins), x,
                               grads.subspan(model.offset_kernel(k), arch.bins));
  }
  for (int k = 0; k < arch.product_kernels; ++k) {
    accumulate_product_kernel_grad(
        d_in_view.subspan(static_cast<std::size_t>(arch.sum_kernels + k) * arch.bins, arch.bins), x,
        grads.subspan(model.offset_kernel(arch.sum_kernels + k), arch.bins));
  }
}

TrainResult train(AdnnModel model, std::span<const PixelSample> samples, const TrainConfig& config) {
  if (samples.empty()) throw Error(ErrorKind::EmptySampleSet, "no training samples");
  if (!(config.learning_rate >= 0.0) || config.batch_size < 1 || config.epochs < 0 || config.momentum < 0.0 ||
      config.momentum >= 1.0) {
    throw Error(ErrorKind::ConfigError, "invalid training configuration");
  }
  for (const auto& s : samples) {
    if (s.histogram.size() != model.architecture().bins) {
      throw Error(ErrorKind::SizeMismatch, fmt::format("sample has {} bins, model expects {}", s.histogram.size(),
                                                       model.architecture().bins));
    }
  }

  const std::size_t n_params = model.parameter_count();
  std::vector<double> grads(n_params);
  std::vector<double> velocity(n_params, 0.0);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);
  AdnnActivations act;

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t n = start; n < end; ++n) {
        const PixelSample& s = samples[order[n]];
        adnn_forward(s.histogram.bins, model, act);
        const double loss = cross_entropy(act.probs, s.label);
        if (!std::isfinite(loss)) {
          throw Error(ErrorKind::NonFiniteLoss, fmt::format("epoch {} sample {} (frame {}, pixel {},{}): loss {}",
                                                            epoch + 1, order[n], s.frame, s.x, s.y, loss));
        }
        epoch_loss += loss;
        adnn_backward(s.histogram.bins, model, act, s.label, grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      auto params = model.parameters();
      for (std::size_t p = 0; p < n_params; ++p) {
        velocity[p] = config.momentum * velocity[p] - config.learning_rate * grads[p] * scale;
        params[p] += velocity[p];
      }
      if (!std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorKind::NonFiniteLoss, fmt::format("non-finite parameter after epoch {} step", epoch + 1));
      }
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  result.model = std::move(model);
  return result;
}

BinaryMask predict_mask(std::span<const Frame> frames, std::size_t t, const AdnnModel& model, TemporalWindow window,
                        double threshold) {
  if (t >= frames.size()) throw Error(ErrorKind::IndexOutOfRange, fmt::format("frame {} of {}", t, frames.size()));
  if (t < static_cast<std::size_t>(window.length)) {
    throw Error(ErrorKind::InsufficientHistory, fmt::format("frame {} has fewer than {} predecessors", t, window.length));
  }
  const Frame& cur = frames[t];
  if (cur.channels != 1) throw Error(ErrorKind::UnsupportedFormat, "predict_mask needs luminance frames");
  BinaryMask mask(cur.width, cur.height);
  std::vector<double> hist(static_cast<std::size_t>(model.architecture().bins));
  AdnnActivations act;
  for (int y = 0; y < cur.height; ++y) {
    for (int x = 0; x < cur.width; ++x) {
      diff_histogram_into(frames, x, y, t, window, hist);
      adnn_forward(hist, model, act);
      mask.set(x, y, act.probs.foreground >= threshold ? Label::Foreground : Label::Background);
    }
  }
  return mask;
}

namespace {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

double layer_grad_check(bool sum, int trials, double eps, std::uint64_t seed, const GradCheckOptions& opt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int b = opt.bins;
  double worst = 0.0;
  auto forward = [sum](const Histogram& x, const DistKernel& w) {
    return sum ? sum_layer_forward(x, w) : product_layer_forward(x, w);
  };
  for (int trial = 0; trial < trials; ++trial) {
    Histogram x(b);
    DistKernel w{std::vector<double>(b)};
    std::vector<double> u(b);
    for (int k = 0; k < b; ++k) {
      x[k] = opt.zero_input ? 0.0 : unit(rng);
      w.weights[k] = opt.zero_input ? 0.0 : unit(rng);
      u[k] = unit(rng);
    }
    // f(x, w) = <u, forward(x, w)>
    auto f = [&](const Histogram& xx, const DistKernel& ww) {
      const Histogram out = forward(xx, ww);
      return std::inner_product(u.begin(), u.end(), out.bins.begin(), 0.0);
    };
    const GradBundle g = sum ? sum_layer_backward(u, x, w) : product_layer_backward(u, x, w);
    for (int k = 0; k < b; ++k) {
      Histogram xp = x, xm = x;
      xp[k] += eps;
      xm[k] -= eps;
      worst = std::max(worst, relative_error(g.d_input[k], (f(xp, w) - f(xm, w)) / (2 * eps)));
      DistKernel wp = w, wm = w;
      wp.weights[k] += eps;
      wm.weights[k] -= eps;
      worst = std::max(worst, relative_error(g.d_kernel[k], (f(x, wp) - f(x, wm)) / (2 * eps)));
    }
  }
  return worst;
}

double classifier_grad_check(int trials, double eps, std::uint64_t seed, const GradCheckOptions& opt) {
  const AdnnArchitecture arch{opt.bins, 2, 2, 8};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    AdnnModel model(arch);
    for (auto& p : model.parameters()) p = opt.zero_input ? 0.0 : unit(rng);
    std::vector<double> channels(static_cast<std::size_t>(arch.classifier_inputs()));
    for (auto& v : channels) v = opt.zero_input ? 0.0 : unit(rng);
    const Label label = (trial % 2 == 0) ? Label::Foreground : Label::Background;

    AdnnActivations probe;
    auto loss = [&](const AdnnModel& m, std::span<const double> ch) {
      classifier_forward(ch, m, probe);
      return cross_entropy_from_logits(probe.logits, label);
    };
    AdnnActivations act;
    act.channels = channels;
    classifier_forward(channels, model, act);
    std::vector<double> grads(model.parameter_count(), 0.0);
    std::vector<double> d_channels(channels.size(), 0.0);
    // Kernel gradients need an input histogram; a zero one leaves them zero,
    // and only the classifier block is compared below.
    const std::vector<double> x(static_cast<std::size_t>(arch.bins), 0.0);
    adnn_backward(x, model, act, label, grads, d_channels);

    const std::size_t first = static_cast<std::size_t>(arch.channels()) * arch.bins;
    for (std::size_t p = first; p < model.parameter_count(); ++p) {
      AdnnModel plus = model, minus = model;
      plus.parameters()[p] += eps;
      minus.parameters()[p] -= eps;
      worst = std::max(worst, relative_error(grads[p], (loss(plus, channels) - loss(minus, channels)) / (2 * eps)));
    }
    for (std::size_t k = 0; k < channels.size(); ++k) {
      auto cp = channels, cm = channels;
      cp[k] += eps;
      cm[k] -= eps;
      worst = std::max(worst, relative_error(d_channels[k], (loss(model, cp) - loss(model, cm)) / (2 * eps)));
    }
  }
  return worst;
}

}  // namespace

double grad_check(GradCheckLayer layer, int trials, double eps, std::uint64_t seed, GradCheckOptions options) {
  if (!(eps > 0.0)) throw Error(ErrorKind::ConfigError, "grad_check eps must be positive");
  validate_bin_count(options.bins);
  switch (layer) {
    case GradCheckLayer::Sum: return layer_grad_check(true, trials, eps, seed, options);
    case GradCheckLayer::Product: return layer_grad_check(false, trials, eps, seed, options);
    case GradCheckLayer::Classifier: return classifier_grad_check(trials, eps, seed, options);
  }
  return 0.0;
}

std::string checkpoint_text(const AdnnModel& model) {
  const auto& a = model.architecture();
  std::string out = fmt::format("adnn-checkpoint 1\nbins {}\nsum_kernels {}\nproduct_kernels {}\nhidden {}\nparams {}\n",
                                a.bins, a.sum_kernels, a.product_kernels, a.hidden, model.parameter_count());
  for (double p : model.parameters()) {
    out += fmt::format("{}\n", p);  // shortest round-trip representation
  }
  return out;
}

AdnnModel parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  auto expect = [&](const char* key) -> long {
    std::string k;
    long v = -1;
    if (!(in >> k >> v) || k != key) {
      throw Error(ErrorKind::CheckpointMismatch, fmt::format("checkpoint: expected '{}' header", key));
    }
    return v;
  };
  if (expect("adnn-checkpoint") != 1) throw Error(ErrorKind::CheckpointMismatch, "unsupported checkpoint version");
  AdnnArchitecture arch;
  arch.bins = static_cast<int>(expect("bins"));
  arch.sum_kernels = static_cast<int>(expect("sum_kernels"));
  arch.product_kernels = static_cast<int>(expect("product_kernels"));
  arch.hidden = static_cast<int>(expect("hidden"));
  const long count = expect("params");
  AdnnModel model;
  try {
    model = AdnnModel(arch);
  } catch (const Error& e) {
    throw Error(ErrorKind::CheckpointMismatch, e.what());
  }
  if (count != static_cast<long>(model.parameter_count())) {
    throw Error(ErrorKind::CheckpointMismatch,
                fmt::format("checkpoint lists {} parameters, architecture needs {}", count, model.parameter_count()));
  }
  std::string token;
  for (auto& p : model.parameters()) {
    if (!(in >> token)) throw Error(ErrorKind::CheckpointMismatch, "checkpoint truncated");
    const auto res = std::from_chars(token.data(), token.data() + token.size(), p);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(p)) {
      throw Error(ErrorKind::CheckpointMismatch, fmt::format("bad parameter '{}'", token));
    }
  }
  if (in >> token) throw Error(ErrorKind::CheckpointMismatch, "trailing data in checkpoint");
  return model;
}

void save_checkpoint(const AdnnModel& model, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_text(model));
}

AdnnModel load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_text_file(path)); }

}  // namespace motiontrim
