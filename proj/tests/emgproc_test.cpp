#include "emgpose/emgproc.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <doctest.h>

#include "emgpose/dataio.hpp"
#include "emgpose/errors.hpp"
#include "emgpose/rng.hpp"

using namespace emgpose;

namespace {

dataio::EmgRecording make_recording(Eigen::Index n, Eigen::Index c) {
  dataio::EmgRecording rec;
  rec.samples.setZero(n, c);
  rec.gridRows = 1;
  rec.gridCols = static_cast<int>(c);
  rec.channelMap = dataio::EmgRecording::default_channel_map(1, static_cast<int>(c));
  return rec;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("constant channel yields a zero envelope and a dead flag") {
  auto rec = make_recording(1000, 2);
  rec.samples.col(0).setConstant(1234);
  for (Eigen::Index i = 0; i < 1000; ++i)
    rec.samples(i, 1) = static_cast<std::int32_t>(100.0 * std::sin(0.05 * double(i)));

  const auto env = emgproc::preprocess(rec, 200, 25);
  REQUIRE(env.values.cols() == 2);
  // Offset removal maps the constant channel to all zeros, so its RMS is 0
  // everywhere and its standard deviation vanishes.
  CHECK(env.deadChannels[0]);
  CHECK_FALSE(env.deadChannels[1]);
  CHECK(env.values.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(env.perChannelStd[0] == 1.0);  // dead substitution
}

TEST_CASE("sinusoid envelope recovers A / sqrt(2) within 1 percent") {
  // 2048 / 50 = 40.96 Hz: the 200-sample window spans exactly 4 periods, so
  // every window sees the same whole-period RMS.
  const double amp = 1.0e-3;  // volts
  auto rec = make_recording(20500, 1);
  const double toVolts = rec.countsToVolts();
  for (Eigen::Index i = 0; i < rec.sampleCount(); ++i) {
    const double v = amp * std::sin(2.0 * M_PI * double(i) / 50.0);
    rec.samples(i, 0) = static_cast<std::int32_t>(std::llround(v / toVolts));
  }

  const auto env = emgproc::preprocess(rec, 200, 25, {}, /*standardize=*/false);
  CHECK_FALSE(env.standardized);
  CHECK(env.scaled);
  const double expect = amp / std::sqrt(2.0) / 1.0e-4;
  for (Eigen::Index k = 0; k < env.values.rows(); ++k)
    CHECK(std::abs(env.values(k, 0) - expect) / expect < 0.01);
}

TEST_CASE("window duration metadata for 200 samples at 2048 Hz") {
  auto rec = make_recording(400, 1);
  const auto env = emgproc::preprocess(rec, 200, 25, {}, false);
  CHECK(env.windowDurationS() == doctest::Approx(0.09765625));
  CHECK(env.windowLen == 200);
  CHECK(env.slide == 25);
}

TEST_CASE("window center timestamps include the sync offset") {
  auto rec = make_recording(300, 1);
  rec.syncStartSample = 4096;  // 2 s at 2048 Hz
  const auto env = emgproc::preprocess(rec, 200, 25, {}, false);
  REQUIRE(env.timestamps.size() == 5);
  for (Eigen::Index k = 0; k < 5; ++k) {
    const double expect = (double(k) * 25.0 + 199.0 / 2.0) / 2048.0 + 2.0;
    CHECK(env.timestamps[k] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("self-standardization zeroes means and normalizes deviations") {
  Rng rng(7);
  auto rec = make_recording(5000, 4);
  for (Eigen::Index i = 0; i < rec.sampleCount(); ++i)
    for (Eigen::Index c = 0; c < 4; ++c)
      rec.samples(i, c) = static_cast<std::int32_t>(rng.uniform(-3000.0, 3000.0));

  const auto env = emgproc::preprocess(rec, 200, 29);
  CHECK(env.standardized);
  const Eigen::Index n = env.values.rows();
  for (Eigen::Index c = 0; c < 4; ++c) {
    const double mean = env.values.col(c).mean();
    const double sd = std::sqrt((env.values.col(c).array() - mean).square().sum() /
                                double(n - 1));
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(sd - 1.0) < 1e-9);
  }

  // Re-standardizing with its own statistics is then the identity.
  const auto stats = emgproc::compute_channel_stats(env.values);
  const Eigen::MatrixXd again = emgproc::apply_standardization(env.values, stats);
  CHECK((again - env.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("supplied training statistics are applied verbatim") {
  Rng rng(11);
  auto rec = make_recording(2000, 2);
  for (Eigen::Index i = 0; i < rec.sampleCount(); ++i)
    for (Eigen::Index c = 0; c < 2; ++c)
      rec.samples(i, c) = static_cast<std::int32_t>(rng.uniform(-2000.0, 2000.0));

  const auto raw = emgproc::preprocess(rec, 200, 25, {}, false);
  emgproc::ChannelStats train;
  train.mean = Eigen::Vector2d(3.0, -1.0);
  train.std = Eigen::Vector2d(2.0, 0.5);
  train.dead = {false, false};
  const auto env = emgproc::preprocess(rec, 200, 25, train);

  for (Eigen::Index k = 0; k < env.values.rows(); ++k)
    for (Eigen::Index c = 0; c < 2; ++c) {
      const double expect = (raw.values(k, c) - train.mean[c]) / train.std[c];
      CHECK(env.values(k, c) == doctest::Approx(expect).epsilon(1e-12));
    }
  CHECK(env.perChannelMean.isApprox(train.mean));
  CHECK(env.perChannelStd.isApprox(train.std));
}

TEST_CASE("identical channels give zero variance in both grid directions") {
  Eigen::MatrixXd env(50, 8);
  Rng rng(3);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const double v = rng.uniform(0.5, 2.0);
    env.row(i).setConstant(v);
  }
  const auto r = emgproc::ndv(env, 4, 2);
  CHECK(r.proximoDistal.cwiseAbs().maxCoeff() < 1e-15);
  CHECK(r.circumferential.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("two-by-two grid variances match the hand computation") {
  // Channels laid out ch = circ * nProx + prox with nCirc = nProx = 2.
  // Channel temporal means are (2, 2, 2, 4), so the normalized matrix is
  //   t0: 0.5 1.0 1.5 1.0
  //   t1: 1.5 1.0 0.5 1.0
  // Proximo-distal variance (over prox pairs (ch0, ch1) and (ch2, ch3)):
  //   circ 0: var(0.5, 1.0) = 0.125 both times -> mean 0.125
  //   circ 1: var(1.5, 1.0) = 0.125, var(0.5, 1.0) = 0.125 -> 0.125
  // Circumferential variance (over circ pairs (ch0, ch2) and (ch1, ch3)):
  //   prox 0: var(0.5, 1.5) = 0.5, var(1.5, 0.5) = 0.5 -> 0.5
  //   prox 1: var(1.0, 1.0) = 0 both times -> 0
  Eigen::MatrixXd env(2, 4);
  env << 1, 2, 3, 4,
         3, 2, 1, 4;
  const auto r = emgproc::ndv(env, 2, 2);
  REQUIRE(r.proximoDistal.size() == 2);
  REQUIRE(r.circumferential.size() == 2);
  CHECK(r.proximoDistal[0] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(r.proximoDistal[1] == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(r.circumferential[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.circumferential[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ndv is invariant to a positive rescaling of the envelope") {
  Rng rng(19);
  Eigen::MatrixXd env(40, 16 * 6);
  for (Eigen::Index i = 0; i < env.rows(); ++i)
    for (Eigen::Index j = 0; j < env.cols(); ++j) env(i, j) = rng.uniform(0.1, 3.0);

  const auto a = emgproc::ndv(env, 16, 6);
  const auto b = emgproc::ndv(Eigen::MatrixXd(2.7 * env), 16, 6);
  CHECK((a.proximoDistal - b.proximoDistal).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.circumferential - b.circumferential).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero-mean channels are excluded from the variance") {
  Eigen::MatrixXd env(10, 4);
  Rng rng(5);
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) env(i, j) = rng.uniform(0.5, 1.5);
  env.col(1).setZero();  // prox position 1 of circ 0

  std::vector<int> excluded;
  const auto r = emgproc::ndv(env, 2, 2, &excluded);
  REQUIRE(excluded == std::vector<int>{1});
  // Circ slice 0 is left with a single valid channel, so its prox variance
  // has no estimate and reports 0.
  CHECK(r.proximoDistal[0] == 0.0);
  CHECK(r.proximoDistal[1] > 0.0);
  // Each prox slice still has two valid circ channels except prox 1, which
  // lost channel 1 and keeps only channel 3.
  CHECK(r.circumferential[0] > 0.0);
  CHECK(r.circumferential[1] == 0.0);
}

TEST_CASE("ndv rejects a grid that does not match the channel count") {
  Eigen::MatrixXd env = Eigen::MatrixXd::Ones(5, 6);
  CHECK_THROWS_AS(emgproc::ndv(env, 4, 2), DataError);
}

TEST_CASE("comparing identical groups centers U and p") {
  const std::vector<double> vals{0.4, 0.8, 1.2, 1.6, 2.0, 2.4};
  const auto cmp = emgproc::ndv_compare(vals, vals);
  CHECK(cmp.test.statistic == doctest::Approx(18.0));  // n1 n2 / 2
  CHECK(cmp.test.pValue > 0.45);
  CHECK(cmp.test.pValue < 0.70);
  CHECK(cmp.proximoDistal.median == doctest::Approx(1.4));
  CHECK(cmp.circumferential.median == doctest::Approx(1.4));
  CHECK(cmp.proximoDistal.iqr() == doctest::Approx(cmp.circumferential.iqr()));
}

TEST_CASE("clearly smaller proximo-distal variances give a small p") {
  std::vector<double> pd, circ;
  Rng rng(23);
  for (int i = 0; i < 20; ++i) pd.push_back(rng.uniform(0.01, 0.05));
  for (int i = 0; i < 10; ++i) circ.push_back(rng.uniform(0.2, 0.5));
  const auto cmp = emgproc::ndv_compare(pd, circ);
  CHECK(cmp.test.pValue < 1e-4);
  CHECK(cmp.proximoDistal.median < cmp.circumferential.median);
}

TEST_CASE("envelope files round trip values and metadata") {
  Rng rng(31);
  auto rec = make_recording(1500, 3);
  for (Eigen::Index i = 0; i < rec.sampleCount(); ++i)
    for (Eigen::Index c = 0; c < 3; ++c)
      rec.samples(i, c) = static_cast<std::int32_t>(rng.uniform(-5000.0, 5000.0));
  rec.samples.col(2).setConstant(7);  // dead after offset removal

  auto env = emgproc::preprocess(rec, 200, 33);
  const std::string path = temp_path("emgpose_env_test.csv");
  emgproc::save_envelope(path, env);
  const auto back = emgproc::load_envelope(path);

  CHECK(back.windowLen == env.windowLen);
  CHECK(back.slide == env.slide);
  CHECK(back.fs == env.fs);
  CHECK(back.scaled == env.scaled);
  CHECK(back.standardized == env.standardized);
  CHECK(back.deadChannels == env.deadChannels);
  REQUIRE(back.values.rows() == env.values.rows());
  REQUIRE(back.values.cols() == env.values.cols());
  CHECK((back.values - env.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.timestamps - env.timestamps).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.perChannelMean.isApprox(env.perChannelMean, 0.0));
  CHECK(back.perChannelStd.isApprox(env.perChannelStd, 0.0));

  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}

TEST_CASE("loading a malformed envelope fails cleanly") {
  const std::string path = temp_path("emgpose_env_bad.csv");
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("time,ch0\n0.1,not-a-number\n", f);
    std::fclose(f);
  }
  {
    std::FILE* f = std::fopen((path + ".json").c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("{\"windowLen\":200,\"slide\":25,\"fs\":2048.0,\"scaled\":true,"
               "\"standardized\":false,\"perChannelMean\":[0.0],"
               "\"perChannelStd\":[1.0],\"deadChannels\":[false]}\n",
               f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(emgproc::load_envelope(path), DataError);
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}
