#include <cmath>
#include <random>

#include "doctest.h"
#include "motiontrim/adnn.hpp"
#include "motiontrim/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace motiontrim;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IoError;
}

// Loss of one sample via the public forward pass; used for finite differences.
double sample_loss(const std::vector<double>& x, const AdnnModel& m, Label label) {
  return cross_entropy(adnn_forward(x, m), label);
}

std::vector<PixelSample> toy_set(int b, int per_class) {
  std::vector<PixelSample> out;
  for (int i = 0; i < per_class; ++i) {
    out.push_back({Histogram::delta(b, b - 1), Label::Foreground, 0, 0, 0});
    out.push_back({Histogram::delta(b, (b - 1) / 2), Label::Background, 0, 0, 0});
  }
  return out;
}

}  // namespace

TEST_CASE("default architecture size") {
  const AdnnArchitecture arch;
  // 8 kernels of 201, W1 8*201 x 64, b1 64, W2 2 x 64, b2 2
  CHECK(arch.parameter_count() == 8 * 201 + 8 * 201 * 64 + 64 + 128 + 2);
  CHECK(arch.parameter_count() == 104714);
  CHECK(AdnnModel::initialized(arch, 1).parameter_count() == 104714);
}

TEST_CASE("initialization") {
  const AdnnArchitecture arch{21, 2, 3, 8};
  const AdnnModel m = AdnnModel::initialized(arch, 4);
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 21; ++j) CHECK(std::abs(m.sum_kernel(k)[j] - (j == 10 ? 1.0 : 0.0)) <= 0.01);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 21; ++j) CHECK(std::abs(m.product_kernel(k)[j] - (j == 20 ? 1.0 : 0.0)) <= 0.01);
  for (double v : m.b1()) CHECK(v == 0.0);
  CHECK(m == AdnnModel::initialized(arch, 4));
  CHECK_FALSE(m == AdnnModel::initialized(arch, 5));
}

TEST_CASE("softmax and classifier head") {
  CHECK(softmax2(0.0, 0.0).foreground == 0.5);
  CHECK(softmax2(37.5, 37.5).background == 0.5);
  const ClassProbs p = softmax2(0.0, std::log(3.0));
  CHECK(p.background == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p.foreground == doctest::Approx(0.75).epsilon(1e-14));
  const ClassProbs big = softmax2(800.0, -800.0);
  CHECK(std::isfinite(big.foreground));
  CHECK(std::abs(big.background + big.foreground - 1.0) <= 1e-12);

  const AdnnModel zero(AdnnArchitecture{5, 1, 1, 4});
  const std::vector<double> ch(10, 0.3);
  const ClassProbs z = classifier_forward(ch, zero);
  CHECK(z.background == 0.5);
  CHECK(z.foreground == 0.5);
  CHECK(kind_of([&] { classifier_forward(std::vector<double>(9, 0.0), zero); }) == ErrorKind::SizeMismatch);
}

TEST_CASE("cross entropy") {
  CHECK(cross_entropy({0.5, 0.5}, Label::Foreground) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(cross_entropy({0.5, 0.5}, Label::Background) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(cross_entropy({1 - 1e-12, 1e-12}, Label::Background) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(cross_entropy({0.25, 0.75}, Label::Foreground) == doctest::Approx(0.287682).epsilon(1e-6));
  CHECK(cross_entropy({1.0, 0.0}, Label::Foreground) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("adnn_forward composes the individual layers") {
  std::mt19937_64 rng(3);
  const AdnnModel m = AdnnModel::initialized({21, 2, 2, 6}, 9, 0.3);
  auto x = oracle::random_vector(rng, 21, 0.0, 1.0);

  std::vector<double> stacked;
  for (int k = 0; k < 2; ++k) {
    const auto s = oracle::naive_sum(x, {m.sum_kernel(k).begin(), m.sum_kernel(k).end()});
    stacked.insert(stacked.end(), s.begin(), s.end());
  }
  for (int k = 0; k < 2; ++k) {
    const auto p = oracle::naive_product(x, {m.product_kernel(k).begin(), m.product_kernel(k).end()});
    stacked.insert(stacked.end(), p.begin(), p.end());
  }
  const ClassProbs composed = classifier_forward(stacked, m);
  const ClassProbs direct = adnn_forward(x, m);
  CHECK(direct.foreground == doctest::Approx(composed.foreground).epsilon(1e-12));

  const ClassProbs again = adnn_forward(x, m);
  CHECK(again.foreground == direct.foreground);
  CHECK(std::abs(direct.background + direct.foreground - 1.0) <= 1e-12);

  AdnnModel ident = AdnnModel::initialized({21, 2, 2, 6}, 9, 0.0);
  AdnnActivations act;
  adnn_forward(x, ident, act);
  for (int k = 0; k < 4; ++k) CHECK(std::vector<double>(act.channels.begin() + k * 21, act.channels.begin() + (k + 1) * 21) == x);

  CHECK(kind_of([&] { adnn_forward(std::vector<double>(19, 0.0), m); }) == ErrorKind::SizeMismatch);
}

TEST_CASE("full backward matches finite differences on every block") {
  std::mt19937_64 rng(12);
  AdnnModel m = AdnnModel::initialized({11, 2, 2, 5}, 2, 0.2);
  for (double& b : m.b1()) b = 0.3;  // keep ReLUs away from their kink
  const auto x = oracle::random_vector(rng, 11, 0.0, 1.0);
  for (Label label : {Label::Background, Label::Foreground}) {
    AdnnActivations act;
    adnn_forward(x, m, act);
    std::vector<double> grads(m.parameter_count(), 0.0);
    adnn_backward(x, m, act, label, grads);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < m.parameter_count(); i += 3) {
      AdnnModel mp = m, mm = m;
      mp.parameters()[i] += eps;
      mm.parameters()[i] -= eps;
      const double numeric = (sample_loss(x, mp, label) - sample_loss(x, mm, label)) / (2 * eps);
      REQUIRE(std::abs(grads[i] - numeric) <= 1e-6 * std::max(1.0, std::abs(numeric)));
    }
  }
}

TEST_CASE("grad_check utility") {
  CHECK(grad_check(GradCheckLayer::Sum, 20, 1e-5, 1) <= 1e-4);
  CHECK(grad_check(GradCheckLayer::Product, 20, 1e-5, 1) <= 1e-4);
  CHECK(grad_check(GradCheckLayer::Classifier, 10, 1e-5, 1) <= 1e-4);
  for (auto layer : {GradCheckLayer::Sum, GradCheckLayer::Product, GradCheckLayer::Classifier}) {
    const double e = grad_check(layer, 3, 1e-5, 1, {21, true});
    CHECK(std::isfinite(e));
    CHECK(e <= 1e-4);
  }
}

TEST_CASE("training") {
  const AdnnArchitecture arch{21, 2, 2, 8};
  const auto samples = toy_set(21, 32);

  SUBCASE("separable toy converges") {
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 8;
    const TrainResult r = train(AdnnModel::initialized(arch, 1), samples, cfg);
    REQUIRE(r.loss_curve.size() == 50);
    CHECK(r.loss_curve.back() < 0.1);
    CHECK(adnn_forward(Histogram::delta(21, 20).bins, r.model).foreground > 0.9);
    CHECK(adnn_forward(Histogram::delta(21, 10).bins, r.model).background > 0.9);
  }
  SUBCASE("bitwise deterministic") {
    TrainConfig cfg;
    cfg.epochs = 5;
    const TrainResult a = train(AdnnModel::initialized(arch, 1), samples, cfg);
    const TrainResult b = train(AdnnModel::initialized(arch, 1), samples, cfg);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(a.model == b.model);
  }
  SUBCASE("zero learning rate leaves the loss constant") {
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.learning_rate = 0.0;
    const TrainResult r = train(AdnnModel::initialized(arch, 1), samples, cfg);
    for (double l : r.loss_curve) CHECK(l == doctest::Approx(r.loss_curve.front()).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CHECK(kind_of([&] { train(AdnnModel::initialized(arch, 1), std::vector<PixelSample>{}, {}); }) ==
          ErrorKind::EmptySampleSet);
    auto poisoned = samples;
    poisoned[5].histogram[3] = std::nan("");
    CHECK(kind_of([&] { train(AdnnModel::initialized(arch, 1), poisoned, {}); }) == ErrorKind::NonFiniteLoss);
  }
}

TEST_CASE("predict_mask") {
  std::vector<Frame> frames(6, Frame(4, 3, 1, 50));
  frames[5].at(1, 1) = 250;
  AdnnModel m = AdnnModel::initialized({21, 1, 1, 4}, 3);

  const BinaryMask all = predict_mask(frames, 5, m, {5}, 0.0);
  CHECK(all.foreground_count() == 12);

  m.b2()[0] = 100.0;  // background logit
  CHECK(predict_mask(frames, 5, m, {5}).foreground_count() == 0);

  CHECK(kind_of([&] { predict_mask(frames, 4, m, {5}); }) == ErrorKind::InsufficientHistory);
}

TEST_CASE("checkpoint round-trip is bitwise") {
  testutil::TempDir dir;
  const AdnnModel m = AdnnModel::initialized({21, 2, 3, 7}, 77, 0.05);
  save_checkpoint(m, dir / "ckpt.txt");
  const AdnnModel back = load_checkpoint(dir / "ckpt.txt");
  CHECK(back == m);
  std::mt19937_64 rng(1);
  const auto x = oracle::random_vector(rng, 21, 0.0, 1.0);
  CHECK(adnn_forward(x, back).foreground == adnn_forward(x, m).foreground);

  std::string text = checkpoint_text(m);
  CHECK(kind_of([&] { parse_checkpoint(text.substr(0, text.size() / 2)); }) == ErrorKind::CheckpointMismatch);
  CHECK(kind_of([&] { parse_checkpoint("adnn-checkpoint 9\n"); }) == ErrorKind::CheckpointMismatch);
  CHECK(kind_of([&] { parse_checkpoint(text + "1.0\n"); }) == ErrorKind::CheckpointMismatch);
  CHECK(kind_of([&] { load_checkpoint(dir / "none.txt"); }) == ErrorKind::IoError);
}

TEST_CASE("logit form of the loss agrees with the probability form") {
  for (double a : {-30.0, -3.0, 0.0, 0.7, 12.0})
    for (double b : {-5.0, 0.0, 2.5, 40.0}) {
      const double z[2] = {a, b};
      for (Label l : {Label::Background, Label::Foreground}) {
        const double direct = cross_entropy(softmax2(a, b), l);
        CHECK(cross_entropy_from_logits(z, l) == doctest::Approx(direct).epsilon(1e-9));
      }
    }
  const double confident[2] = {-20.0, 20.0};
  CHECK(cross_entropy_from_logits(confident, Label::Foreground) == doctest::Approx(std::exp(-40.0)).epsilon(1e-12));
}
