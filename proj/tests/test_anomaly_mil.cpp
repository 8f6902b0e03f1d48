#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "motiontrim/anomaly_mil.hpp"
#include "motiontrim/error.hpp"
#include "motiontrim/synthetic.hpp"
#include "test_util.hpp"

using namespace motiontrim;

namespace {

std::string error_text(const auto& fn, ErrorKind* kind = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (kind) *kind = e.kind();
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

ErrorKind kind_of(const auto& fn) {
  ErrorKind k = ErrorKind::IoError;
  error_text(fn, &k);
  return k;
}

// Independent descriptor: floating-point binning and two-pass statistics.
std::vector<double> oracle_features(const std::vector<Frame>& f, std::size_t a, std::size_t b,
                                    const std::vector<BinaryMask>& masks) {
  std::vector<double> out(20, 0.0);
  std::vector<double> pair_means;
  double count = 0;
  for (std::size_t t = a; t < b; ++t) {
    double s = 0;
    for (std::size_t i = 0; i < f[t].data.size(); ++i) {
      const double d = std::abs(double(f[t + 1].data[i]) - f[t].data[i]) / 255.0;
      out[std::min(15, static_cast<int>(std::floor(d * 16)))] += 1;
      s += d;
      count += 1;
    }
    pair_means.push_back(s / f[t].data.size());
  }
  for (int k = 0; k < 16; ++k) out[k] /= count;
  double mean = 0;
  for (double m : pair_means) mean += m / pair_means.size();
  double var = 0;
  for (double m : pair_means) var += (m - mean) * (m - mean) / pair_means.size();
  out[16] = mean;
  out[17] = std::sqrt(var);
  out[18] = *std::max_element(pair_means.begin(), pair_means.end());
  if (!masks.empty()) {
    for (std::size_t t = a; t <= b; ++t)
      out[19] += static_cast<double>(masks[t].foreground_count()) / masks[t].pixel_count() / (b - a + 1);
  }
  return out;
}

SegmentFeatures constant_features(int s, int d, double v) {
  return {s, d, std::vector<double>(static_cast<std::size_t>(s) * d, v)};
}

}  // namespace

TEST_CASE("segment_video") {
  const auto even = segment_video(64, 32);
  REQUIRE(even.size() == 32);
  for (std::size_t i = 0; i < 32; ++i) CHECK(even[i] == std::pair<std::size_t, std::size_t>{2 * i, 2 * i + 1});

  const auto odd = segment_video(65, 32);
  CHECK(odd[0] == std::pair<std::size_t, std::size_t>{0, 2});
  for (std::size_t i = 1; i < 32; ++i) CHECK(odd[i].second - odd[i].first == 1);

  CHECK(kind_of([] { segment_video(10, 32); }) == ErrorKind::InsufficientFrames);

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int s = 2 + static_cast<int>(rng() % 40);
    const std::size_t n = s + rng() % 500;
    const auto r = segment_video(n, s);
    REQUIRE(r.size() == static_cast<std::size_t>(s));
    REQUIRE(r.front().first == 0);
    REQUIRE(r.back().second == n - 1);
    std::size_t lo = n, hi = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i > 0) REQUIRE(r[i].first == r[i - 1].second + 1);
      const std::size_t len = r[i].second - r[i].first + 1;
      if (i > 0) REQUIRE(len <= r[i - 1].second - r[i - 1].first + 1);
      lo = std::min(lo, len);
      hi = std::max(hi, len);
    }
    REQUIRE(hi - lo <= 1);
  }
}

TEST_CASE("builtin_features") {
  SUBCASE("static segment") {
    const std::vector<Frame> f(4, Frame(5, 5, 1, 90));
    const auto v = builtin_features(f, {0, 3});
    REQUIRE(v.size() == 20);
    CHECK(v[0] == 1.0);
    for (int k = 1; k < 20; ++k) CHECK(v[k] == 0.0);
  }
  SUBCASE("full-range difference") {
    const std::vector<Frame> f{Frame(3, 3, 1, 0), Frame(3, 3, 1, 255)};
    const auto v = builtin_features(f, {0, 1});
    CHECK(v[15] == 1.0);
    CHECK(v[16] == 1.0);
    CHECK(v[17] == 0.0);
    CHECK(v[18] == 1.0);
  }
  SUBCASE("4x4 three-frame toy against the reference") {
    std::vector<Frame> f(3, Frame(4, 4, 1, 20));
    // a bright 2x2 block steps right by one pixel each frame
    for (int t = 0; t < 3; ++t)
      for (int y = 1; y < 3; ++y)
        for (int x = t; x < t + 2 && x < 4; ++x) f[t].at(x, y) = 200;
    f[2].at(0, 0) = 60;
    std::vector<BinaryMask> masks(3, BinaryMask(4, 4));
    masks[1].set(1, 1, Label::Foreground);
    masks[2].set(2, 2, Label::Foreground);
    masks[2].set(3, 2, Label::Foreground);

    const auto v = builtin_features(f, {0, 2}, masks);
    const auto expect = oracle_features(f, 0, 2, masks);
    for (int k = 0; k < 20; ++k) CHECK(v[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    // spot values: pair 0 changes 4 of 16 pixels by 180, pair 1 the same plus one pixel by 40
    CHECK(v[11] == doctest::Approx(8.0 / 32));
    CHECK(v[2] == doctest::Approx(1.0 / 32));
    CHECK(v[19] == doctest::Approx(3.0 / 48));
  }
  SUBCASE("random ranges against the reference") {
    std::mt19937_64 rng(42);
    std::vector<Frame> f(12, Frame(6, 5, 1));
    for (auto& fr : f)
      for (auto& p : fr.data) p = static_cast<std::uint8_t>(rng() % 256);
    for (std::size_t a = 0; a < 10; a += 3) {
      const auto v = builtin_features(f, {a, a + 2});
      const auto expect = oracle_features(f, a, a + 2, {});
      for (int k = 0; k < 20; ++k) CHECK(v[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    }
  }
  SUBCASE("single-frame range") {
    const std::vector<Frame> f(3, Frame(2, 2, 1, 0));
    CHECK(kind_of([&] { builtin_features(f, {1, 1}); }) == ErrorKind::RangeTooShort);
  }
}

TEST_CASE("video_features shape") {
  std::vector<Frame> f(40, Frame(4, 4, 1, 0));
  for (std::size_t t = 0; t < f.size(); ++t) f[t].at(0, 0) = static_cast<std::uint8_t>(t * 5);
  const SegmentFeatures s = video_features(f, 32);
  CHECK(s.segments == 32);
  CHECK(s.dims == 20);
  CHECK(s.values.size() == 640);
  for (double v : s.values) CHECK(std::isfinite(v));
}

TEST_CASE("feature file parsing") {
  std::string good;
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 20; ++c) good += (c ? "," : "") + std::to_string(r * 0.5 + c);
    good += "\n";
  }
  const SegmentFeatures f = parse_features(good);
  CHECK(f.segments == 32);
  CHECK(f.dims == 20);
  CHECK(f.row(3)[2] == 3.5);
  CHECK(parse_features(features_text(f)).values == f.values);

  const std::string short_text = good.substr(0, good.rfind('\n', good.size() - 2) + 1);
  ErrorKind k = ErrorKind::IoError;
  const std::string msg = error_text([&] { parse_features(short_text); }, &k);
  CHECK((k == ErrorKind::RaggedRows || k == ErrorKind::ParseError));
  CHECK(msg.find("31") != std::string::npos);

  CHECK(kind_of([] { parse_features("1,2\n3\n", 2); }) == ErrorKind::RaggedRows);
  CHECK(kind_of([] { parse_features("1,NaN\n3,4\n", 2); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { parse_features("1,inf\n3,4\n", 2); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { parse_features("1,x\n3,4\n", 2); }) == ErrorKind::ParseError);

  testutil::TempDir dir;
  write_text_file(dir / "f.csv", good);
  CHECK(load_features(dir / "f.csv").values == f.values);
}

TEST_CASE("score_forward") {
  const MilNetwork zero(20, 8, 4);
  for (double scale : {1.0, 7.5}) {
    const auto s = score_forward(constant_features(32, 20, scale), zero);
    for (double v : s) CHECK(v == 0.5);
  }
  CHECK(kind_of([&] { score_forward(constant_features(32, 19, 0.0), zero); }) == ErrorKind::SizeMismatch);

  std::mt19937_64 rng(43);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    MilNetwork net = MilNetwork::initialized(6, 16, 8, trial);
    SegmentFeatures f{8, 6, std::vector<double>(48)};
    for (auto& v : f.values) v = n01(rng) * 3;
    const auto a = score_forward(f, net);
    CHECK(score_forward(f, net) == a);
    for (double v : a) CHECK((v > 0.0 && v < 1.0));
    net.parameters()[net.offset_b3()] += 0.5;
    const auto b = score_forward(f, net);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] > a[i]);
  }
}

TEST_CASE("MIL gradient matches finite differences") {
  std::mt19937_64 rng(44);
  MilNetwork net = MilNetwork::initialized(5, 7, 4, 3);
  for (std::size_t i = net.offset_b1(); i < net.offset_w2(); ++i) net.parameters()[i] = 0.2;
  for (std::size_t i = net.offset_b2(); i < net.offset_w3(); ++i) net.parameters()[i] = 0.2;
  std::vector<double> x{0.3, -0.2, 0.8, 0.1, -0.5};
  std::vector<double> g(net.parameters().size(), 0.0);
  net.accumulate_gradient(x, 1.0, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    MilNetwork p = net, m = net;
    p.parameters()[i] += 1e-6;
    m.parameters()[i] -= 1e-6;
    const double numeric = (p.score(x) - m.score(x)) / 2e-6;
    REQUIRE(std::abs(g[i] - numeric) <= 1e-7);
  }
}

TEST_CASE("ranking loss") {
  std::vector<double> pos(32, 0.0), neg(32, 0.0);
  pos[4] = 1.0;
  CHECK(mil_ranking_loss(pos, neg, 0, 0) == 0.0);
  std::vector<double> p0(32, 0.0), n1(32, 0.0);
  n1[9] = 1.0;
  CHECK(mil_ranking_loss(p0, n1, 0, 0) == 2.0);
  const std::vector<double> half(32, 0.5);
  CHECK(mil_ranking_loss(half, half, 0.0, 0.01) == doctest::Approx(1.16).epsilon(1e-12));
  CHECK(kind_of([&] { mil_ranking_loss(half, std::vector<double>(31, 0.5), 0, 0); }) == ErrorKind::SizeMismatch);

  // smoothness term by hand: (0.2-0.6)^2 + (0.6-0.1)^2 = 0.41
  const std::vector<double> a{0.2, 0.6, 0.1}, b{0.0, 0.0, 0.0};
  CHECK(mil_ranking_loss(a, b, 1.0, 0.0) == doctest::Approx(0.4 + 0.41));

  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(16), n(16);
    for (auto& v : p) v = u(rng);
    for (auto& v : n) v = u(rng);
    CHECK(mil_ranking_loss(p, n, 8e-5, 8e-5) >= 0.0);
    const double h = mil_hinge(p, n);
    std::shuffle(p.begin(), p.end(), rng);
    std::shuffle(n.begin(), n.end(), rng);
    CHECK(mil_hinge(p, n) == h);
  }
}

TEST_CASE("train_mil") {
  const auto bags = make_gaussian_bags(6, 6, 8, 3, 3.0, 5, 16);
  MilParams p;
  p.hidden1 = 32;
  p.hidden2 = 8;
  p.epochs = 60;
  p.learning_rate = 0.01;
  p.seed = 9;

  const MilTrainResult a = train_mil(bags, p);
  const MilTrainResult b = train_mil(bags, p);
  CHECK(a.loss_history == b.loss_history);
  CHECK(a.network == b.network);
  REQUIRE(a.hinge_history.size() == 60);
  CHECK(a.hinge_history.back() < a.hinge_history.front());

  std::vector<Bag> negatives;
  for (const auto& bag : bags)
    if (bag.polarity == Polarity::Negative) negatives.push_back(bag);
  CHECK(kind_of([&] { train_mil(negatives, p); }) == ErrorKind::MissingPolarity);

  testutil::TempDir dir;
  save_mil_weights(a.network, dir / "w.bin");
  CHECK(load_mil_weights(dir / "w.bin") == a.network);
}

TEST_CASE("score outputs") {
  const ScoreSeries flat(32, 0.5);
  const std::string csv = scores_csv(flat);
  CHECK(csv.rfind("segment,score\n0,0.500000\n1,0.500000\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 33);
  CHECK(parse_scores_csv(csv) == flat);

  ScoreSeries rounded{0.123456, 0.999999, 0.0, 0.5};
  CHECK(parse_scores_csv(scores_csv(rounded)) == rounded);

  const std::string svg = scores_svg(flat);
  CHECK(svg.find("width=\"640\"") != std::string::npos);
  CHECK(svg.find("height=\"320\"") != std::string::npos);
  const auto start = svg.find("points=\"");
  REQUIRE(start != std::string::npos);
  const auto end = svg.find('"', start + 8);
  // every vertex shares one y coordinate
  std::vector<std::string> ys;
  std::istringstream pts(svg.substr(start + 8, end - start - 8));
  std::string pt;
  while (pts >> pt) ys.push_back(pt.substr(pt.find(',') + 1));
  CHECK(ys.size() == 32);
  CHECK(std::all_of(ys.begin(), ys.end(), [&](const std::string& y) { return y == ys.front(); }));

  testutil::TempDir dir;
  const ScoreSeries s = score_video(constant_features(32, 20, 1.0), MilNetwork(20, 4, 2), dir / "graph");
  CHECK(s == flat);
  CHECK(read_text_file(dir / "graph.csv") == csv);
  CHECK(std::filesystem::exists(dir / "graph.svg"));
}

TEST_CASE("spearman and compare_graphs") {
  const std::vector<double> a{1, 2, 3, 4}, r{4, 3, 2, 1};
  CHECK(spearman(a, a) == doctest::Approx(1.0));
  CHECK(spearman(a, r) == doctest::Approx(-1.0));
  // ties: ranks (1.5, 1.5, 3, 4) against (1, 2, 3, 4)
  CHECK(spearman(std::vector<double>{5, 5, 6, 7}, a) == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)));
  CHECK(spearman(std::vector<double>{1, 1, 1, 1}, a) == 0.0);

  ScoreSeries full(32);
  for (int i = 0; i < 32; ++i) full[i] = std::sin(i * 0.7) + i * 0.01;
  const TrimSegmentMap identity{{{0, 95}}, 96};
  CHECK(compare_graphs(full, full, identity, 96) == doctest::Approx(1.0));
  ScoreSeries neg(32);
  for (int i = 0; i < 32; ++i) neg[i] = -full[i];
  CHECK(compare_graphs(full, neg, identity, 96) == doctest::Approx(-1.0));

  CHECK(kind_of([&] { compare_graphs(full, full, TrimSegmentMap{{{0, 99}}, 100}, 96); }) == ErrorKind::InconsistentMap);
  CHECK(kind_of([&] { compare_graphs(full, full, TrimSegmentMap{}, 96); }) == ErrorKind::InconsistentMap);
}
