#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "motiontrim/distribution_layers.hpp"
#include "motiontrim/histogram.hpp"
#include "motiontrim/image.hpp"

namespace motiontrim {

struct AdnnArchitecture {
  int bins = kDefaultBins;  // B
  int sum_kernels = 4;      // K1
  int product_kernels = 4;  // K2
  int hidden = 64;          // H

  int channels() const { return sum_kernels + product_kernels; }
  int classifier_inputs() const { return channels() * bins; }
  std::size_t parameter_count() const;

  bool operator==(const AdnnArchitecture&) const = default;
};

/// Probability pair (background, foreground); sums to 1.
struct ClassProbs {
  double background = 0.5;
  double foreground = 0.5;

  double operator[](Label l) const { return l == Label::Foreground ? foreground : background; }
};

/// Parallel sum and product distribution layers feeding a two-layer classifier.
///
/// All parameters live in one flat vector, in checkpoint order:
///   sum kernels (K1 x B), product kernels (K2 x B),
///   W1 (K*B x H, input-major), b1 (H), W2 (2 x H, row-major), b2 (2).
/// Logit 0 is background, logit 1 is foreground.
class AdnnModel {
 public:
  AdnnModel() = default;
  /// Zero-initialized parameters.
  explicit AdnnModel(AdnnArchitecture arch);

  /// Identity kernels (sum: delta at 0, product: delta at +1) plus uniform noise
  /// in [-noise, noise]; classifier weights Xavier-uniform, biases zero.
  static AdnnModel initialized(AdnnArchitecture arch, std::uint64_t seed, double kernel_noise = 0.01);

  const AdnnArchitecture& architecture() const { return arch_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> sum_kernel(int k);
  std::span<const double> sum_kernel(int k) const;
  std::span<double> product_kernel(int k);
  std::span<const double> product_kernel(int k) const;
  std::span<double> w1();
  std::span<const double> w1() const;
  std::span<double> b1();
  std::span<const double> b1() const;
  std::span<double> w2();
  std::span<const double> w2() const;
  std::span<double> b2();
  std::span<const double> b2() const;

  // Offsets of each block in the flat layout.
  std::size_t offset_kernel(int channel) const { return static_cast<std::size_t>(channel) * arch_.bins; }
  std::size_t offset_w1() const;
  std::size_t offset_b1() const;
  std::size_t offset_w2() const;
  std::size_t offset_b2() const;

  bool operator==(const AdnnModel&) const = default;

 private:

  AdnnArchitecture arch_;
  std::vector<double> params_;
};

/// Intermediate values kept for backpropagation.
struct AdnnActivations {
  std::vector<double> channels;    // K x B stacked layer outputs
  std::vector<double> hidden_pre;  // H
  std::vector<double> hidden;      // H, after max(0, .)
  double logits[2] = {0.0, 0.0};
  ClassProbs probs;
};

ClassProbs softmax2(double logit_bg, double logit_fg);

/// Classifier head over stacked channels (size K*B).
ClassProbs classifier_forward(std::span<const double> channels, const AdnnModel& model);
void classifier_forward(std::span<const double> channels, const AdnnModel& model, AdnnActivations& act);

/// All layers applied to x in parallel, then the classifier.
ClassProbs adnn_forward(std::span<const double> x, const AdnnModel& model);
void adnn_forward(std::span<const double> x, const AdnnModel& model, AdnnActivations& act);

/// -ln(max(p[label], 1e-12)).
double cross_entropy(const ClassProbs& probs, Label label);
/// Same loss evaluated from the logits as a softplus, which keeps full
/// relative precision when the prediction is confidently right.
double cross_entropy_from_logits(const double logits[2], Label label);

/// Adds d(cross_entropy)/d(params) for one sample to `grads` (same layout as
/// the model's parameters). If `d_channels` is non-empty it receives the
/// gradient with respect to the stacked channel inputs of the classifier.
void adnn_backward(std::span<const double> x, const AdnnModel& model, const AdnnActivations& act, Label label,
                   std::span<double> grads, std::span<double> d_channels = {});

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 1;
  double momentum = 0.9;
};

struct TrainResult {
  AdnnModel model;
  std::vector<double> loss_curve;  // mean loss per epoch
};

/// Mini-batch SGD with momentum (v = m*v - lr*g; p += v). Sample order is a
/// seeded shuffle per epoch; batch gradients are summed in sample order and
/// averaged, so results are bitwise reproducible.
TrainResult train(AdnnModel model, std::span<const PixelSample> samples, const TrainConfig& config);

/// Foreground iff p_fg >= threshold. Frames must be luminance.
BinaryMask predict_mask(std::span<const Frame> frames, std::size_t t, const AdnnModel& model, TemporalWindow window,
                        double threshold = 0.5);

enum class GradCheckLayer { Sum, Product, Classifier };

struct GradCheckOptions {
  int bins = 21;
  bool zero_input = false;  // all-zero inputs, exercising the denominator floor
};

/// Max relative error |a - n| / max(1e-8, |a| + |n|) between analytic gradients
/// and central differences over `trials` seeded random cases.
double grad_check(GradCheckLayer layer, int trials, double eps, std::uint64_t seed, GradCheckOptions options = {});

/// Text checkpoint: header lines then one parameter per line in layout order.
std::string checkpoint_text(const AdnnModel& model);
AdnnModel parse_checkpoint(const std::string& text);
void save_checkpoint(const AdnnModel& model, const std::filesystem::path& path);
AdnnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace motiontrim
