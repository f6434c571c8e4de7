#include "emgpose/kinematics.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "emgpose/errors.hpp"
#include "emgpose/rng.hpp"

using emgpose::DataError;
using emgpose::Rng;
using namespace emgpose::kin;

namespace {

constexpr double kPi = 3.14159265358979323846;

MarkerFrame hand_frame_of(const JointAngles& a, const HandSkeleton& s) {
  // Markers with the wrist removed, as ika_finger / ika_thumb expect.
  JointAngles noWrist = a;
  noWrist[0] = noWrist[1] = noWrist[2] = 0.0;
  return fka(noWrist, s, RomPolicy::Strict);
}

}  // namespace

TEST_CASE("rest pose reproduces the reference marker layout") {
  const HandSkeleton s = default_skeleton();
  const MarkerFrame f = fka(JointAngles{}, s, RomPolicy::Strict);
  REQUIRE(f.labels.size() == 23);
  REQUIRE(f.positions.size() == 23);

  const std::array<std::string, 4> fingerNames = {"index", "middle", "ring", "little"};
  for (std::size_t fi = 0; fi < 4; ++fi) {
    Eigen::Vector3d expect = s.fingers[fi].base;
    CHECK((f.at(fingerNames[fi] + "_mp") - expect).norm() == doctest::Approx(0.0));
    const std::array<std::string, 3> distal = {"pip", "dip", "tip"};
    for (std::size_t seg = 0; seg < 3; ++seg) {
      expect += s.fingers[fi].length[seg] * Eigen::Vector3d(0, 1, 0);
      CHECK((f.at(fingerNames[fi] + "_" + distal[seg]) - expect).norm() < 1e-12);
    }
  }
  Eigen::Vector3d thumbExpect = s.thumb.base;
  CHECK((f.at("thumb_mp") - thumbExpect).norm() < 1e-12);
  const std::array<std::string, 3> distal = {"pip", "dip", "tip"};
  for (std::size_t seg = 0; seg < 3; ++seg) {
    thumbExpect += s.thumb.length[seg] * s.thumb.restDir;
    CHECK((f.at("thumb_" + distal[seg]) - thumbExpect).norm() < 1e-12);
  }
  CHECK((f.at("hand_dorsum") - s.dorsumMarker).norm() == doctest::Approx(0.0));
  CHECK((f.at("forearm_1") - s.forearmMarkers[0]).norm() == doctest::Approx(0.0));
  CHECK((f.at("forearm_2") - s.forearmMarkers[1]).norm() == doctest::Approx(0.0));
}

TEST_CASE("wrist z rotation of pi/2 rotates every hand marker about the wrist") {
  const HandSkeleton s = default_skeleton();
  const MarkerFrame rest = fka(JointAngles{}, s, RomPolicy::Strict);
  JointAngles a;
  a[2] = kPi / 2.0;
  const MarkerFrame rot = fka(a, s, RomPolicy::Strict);
  Eigen::Matrix3d rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  for (std::size_t i = 0; i < 21; ++i)
    CHECK((rot.positions[i] - rz * rest.positions[i]).norm() < 1e-12);
  // Forearm markers are the fixed reference and do not rotate.
  CHECK((rot.at("forearm_1") - rest.at("forearm_1")).norm() == doctest::Approx(0.0));
  CHECK((rot.at("forearm_2") - rest.at("forearm_2")).norm() == doctest::Approx(0.0));
}

TEST_CASE("index MP flexion of pi/2 is a hinge about the knuckle axis") {
  const HandSkeleton s = default_skeleton();
  const MarkerFrame rest = fka(JointAngles{}, s, RomPolicy::Strict);
  JointAngles a;
  a.set_finger(0, 2, kPi / 2.0);  // index gamma
  const MarkerFrame flexed = fka(a, s, RomPolicy::Strict);

  // Flexion axis at (alpha, beta) = (0, 0) is -x; rotating (0,1,0) by pi/2
  // about it sends distal markers palmar (toward -z).
  const Eigen::Matrix3d hinge =
      Eigen::AngleAxisd(kPi / 2.0, Eigen::Vector3d(-1, 0, 0)).toRotationMatrix();
  const Eigen::Vector3d base = s.fingers[0].base;
  for (const std::string& m : {"index_pip", "index_dip", "index_tip"}) {
    const Eigen::Vector3d expect = base + hinge * (rest.at(m) - base);
    CHECK((flexed.at(m) - expect).norm() < 1e-12);
  }
  CHECK((flexed.at("index_mp") - base).norm() == doctest::Approx(0.0));
  for (const std::string& m : {"middle_tip", "ring_tip", "little_tip", "thumb_tip"})
    CHECK((flexed.at(m) - rest.at(m)).norm() == doctest::Approx(0.0));
}

TEST_CASE("out-of-range angles are clamped or rejected by policy") {
  const HandSkeleton s = default_skeleton();
  JointAngles a;
  a[0] = s.romMax[0] + 0.5;
  CHECK_THROWS_AS((void)fka(a, s, RomPolicy::Strict), DataError);
  std::vector<std::size_t> clamped;
  const MarkerFrame f = fka(a, s, RomPolicy::Clamp, &clamped);
  REQUIRE(clamped.size() == 1);
  CHECK(clamped[0] == 0);
  JointAngles atMax;
  atMax[0] = s.romMax[0];
  const MarkerFrame g = fka(atMax, s, RomPolicy::Strict);
  for (std::size_t i = 0; i < f.positions.size(); ++i)
    CHECK((f.positions[i] - g.positions[i]).norm() == doctest::Approx(0.0));
}

TEST_CASE("wrist extraction is exact") {
  const HandSkeleton s = default_skeleton();

  SUBCASE("rest pose gives zeros") {
    const auto w = ika_wrist(fka(JointAngles{}, s), s);
    for (double v : w) CHECK(std::abs(v) < 1e-12);
  }

  SUBCASE("single documented pose") {
    JointAngles a;
    a[0] = 0.1;
    a[1] = -0.2;
    a[2] = 0.3;
    const auto w = ika_wrist(fka(a, s), s);
    CHECK(std::abs(w[0] - 0.1) < 1e-9);
    CHECK(std::abs(w[1] + 0.2) < 1e-9);
    CHECK(std::abs(w[2] - 0.3) < 1e-9);
  }

  SUBCASE("random in-range wrist poses round-trip below 1e-12 rad") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      JointAngles a = random_pose(s, rng);
      const auto w = ika_wrist(fka(a, s, RomPolicy::Strict), s);
      for (int k = 0; k < 3; ++k) CHECK(std::abs(w[k] - a[k]) < 1e-12);
    }
  }

  SUBCASE("collinear markers are rejected") {
    MarkerFrame bad;
    bad.labels = {"index_mp", "little_mp", "hand_dorsum"};
    bad.positions = {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0, 0),
                     Eigen::Vector3d(2, 0, 0)};
    CHECK_THROWS_AS((void)ika_wrist(bad, s), DataError);
  }
}

TEST_CASE("wrist extraction is equivariant under a global rotation") {
  const HandSkeleton s = default_skeleton();
  Rng rng(12);
  JointAngles a = random_pose(s, rng);
  const MarkerFrame f = fka(a, s, RomPolicy::Strict);
  const Eigen::Matrix3d q =
      Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, -1).normalized()).toRotationMatrix();
  MarkerFrame rotated = f;
  for (auto& p : rotated.positions) p = q * p;
  const auto w = ika_wrist(rotated, s);
  const Eigen::Matrix3d recovered = wrist_rotation(w[0], w[1], w[2]);
  const Eigen::Matrix3d expected = q * wrist_rotation(a[0], a[1], a[2]);
  CHECK((recovered - expected).norm() < 1e-9);
}

TEST_CASE("straight finger gives zero angles with the gate fully closed") {
  const HandSkeleton s = default_skeleton();
  const MarkerFrame hand = hand_frame_of(JointAngles{}, s);
  FingerSolveInfo info;
  const auto f = ika_finger(hand, s, 0, &info);
  CHECK(std::abs(f[0]) < 1e-9);
  CHECK(std::abs(f[1]) < 1e-9);
  CHECK(std::abs(f[2]) < 1e-9);
  CHECK(std::abs(f[3]) < 1e-9);
  CHECK(std::abs(f[4]) < 1e-9);
  CHECK(info.zetaMm < 1e-9);
  CHECK(info.gate < 0.1);
  CHECK(info.converged);
}

TEST_CASE("pure flexion chain is recovered exactly") {
  const HandSkeleton s = default_skeleton();
  JointAngles a;
  a.set_finger(0, 2, 0.6);
  a.set_finger(0, 3, 0.4);
  a.set_finger(0, 4, 0.2);
  const MarkerFrame hand = hand_frame_of(a, s);
  FingerSolveInfo info;
  const auto f = ika_finger(hand, s, 0, &info);
  // True (alpha, beta) = (0, 0): the gate scales an already-zero estimate, so
  // the in-plane flexions come back exact.
  CHECK(std::abs(f[0]) < 1e-6);
  CHECK(std::abs(f[1]) < 1e-6);
  CHECK(std::abs(f[2] - 0.6) < 1e-3);
  CHECK(std::abs(f[3] - 0.4) < 1e-3);
  CHECK(std::abs(f[4] - 0.2) < 1e-3);
  CHECK(info.residualMm < 1e-3);
}

TEST_CASE("clearly bent fingers reproject below 1 mm") {
  const HandSkeleton s = default_skeleton();
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    JointAngles a = random_pose(s, rng);
    // Force a solid bend so the plane is observable and the gate is open.
    for (std::size_t f = 0; f < kNumFingers; ++f) {
      a.set_finger(f, 3, rng.uniform(0.9, s.romMax[3 + 5 * f + 3]));
      a.set_finger(f, 4, rng.uniform(0.7, s.romMax[3 + 5 * f + 4]));
    }
    const MarkerFrame hand = hand_frame_of(a, s);
    for (std::size_t f = 0; f < kNumFingers; ++f) {
      FingerSolveInfo info;
      (void)ika_finger(hand, s, f, &info);
      CHECK(info.residualMm < 1.0);
    }
  }
}

TEST_CASE("thumb recovery is exact") {
  const HandSkeleton s = default_skeleton();

  SUBCASE("rest gives six zeros") {
    const auto t = ika_thumb(hand_frame_of(JointAngles{}, s), s);
    for (double v : t) CHECK(std::abs(v) < 1e-12);
  }

  SUBCASE("pure proximal flexion comes back as the first angle") {
    JointAngles a;
    a[23] = 0.45;
    const auto t = ika_thumb(hand_frame_of(a, s), s);
    CHECK(std::abs(t[0] - 0.45) < 1e-12);
    for (int k = 1; k < 6; ++k) CHECK(std::abs(t[k]) < 1e-12);
  }

  SUBCASE("random in-range poses round-trip below 1e-9 rad") {
    Rng rng(14);
    for (int trial = 0; trial < 500; ++trial) {
      JointAngles a = random_pose(s, rng);
      const auto t = ika_thumb(hand_frame_of(a, s), s);
      for (int k = 0; k < 6; ++k) CHECK(std::abs(t[k] - a[23 + k]) < 1e-9);
    }
  }
}

TEST_CASE("full inverse kinematics round trip") {
  const HandSkeleton s = default_skeleton();

  SUBCASE("rest pose is recovered with negligible residual") {
    const IkaResult r = ika(fka(JointAngles{}, s), s);
    for (std::size_t i = 0; i < kNumJoints; ++i) CHECK(std::abs(r.angles[i]) < 1e-9);
    CHECK(r.residualMm < 1e-9);
  }

  SUBCASE("random poses: wrist and thumb below 1e-6 rad, fingers below 1 mm mean") {
    Rng rng(15);
    double residualSum = 0.0;
    const int kTrials = 300;
    for (int trial = 0; trial < kTrials; ++trial) {
      const JointAngles a = random_pose(s, rng);
      const IkaResult r = ika(fka(a, s, RomPolicy::Strict), s);
      for (int k = 0; k < 3; ++k) CHECK(std::abs(r.angles[k] - a[k]) < 1e-6);
      for (int k = 0; k < 6; ++k) CHECK(std::abs(r.angles[23 + k] - a[23 + k]) < 1e-6);
      CHECK(r.perPhaseResidual[0] < 1e-9);
      CHECK(r.perPhaseResidual[2] < 1e-9);
      CHECK(r.fingersConverged);
      residualSum += r.residualMm;
    }
    CHECK(residualSum / kTrials < 1.0);
  }

  SUBCASE("a missing marker is reported by name") {
    MarkerFrame f = fka(JointAngles{}, s);
    const auto it = std::find(f.labels.begin(), f.labels.end(), "ring_dip");
    f.positions.erase(f.positions.begin() + (it - f.labels.begin()));
    f.labels.erase(it);
    CHECK_THROWS_WITH_AS((void)ika(f, s), doctest::Contains("ring_dip"), DataError);
  }
}

TEST_CASE("angle normalization divides by 45 degrees around the rest pose") {
  JointAngles rest;
  rest[5] = 0.1;
  JointAngles a = rest;
  a[5] += kPi / 4.0;
  a[7] = kPi / 8.0;
  const Eigen::VectorXd n = normalize_angles(a, rest);
  CHECK(n(5) == doctest::Approx(1.0));
  CHECK(n(7) == doctest::Approx(0.5));
  CHECK(n(0) == doctest::Approx(0.0));
  const JointAngles back = denormalize_angles(n, rest);
  for (std::size_t i = 0; i < kNumJoints; ++i) CHECK(std::abs(back[i] - a[i]) < 1e-12);

  const Eigen::VectorXd zero = normalize_angles(rest, rest);
  CHECK(zero.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("skeleton JSON round trip and partial overrides") {
  const HandSkeleton s = default_skeleton();
  const HandSkeleton back = skeleton_from_json_string(skeleton_to_json_string(s));
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    CHECK((back.fingers[f].base - s.fingers[f].base).norm() < 1e-12);
    for (int k = 0; k < 3; ++k)
      CHECK(back.fingers[f].length[k] == doctest::Approx(s.fingers[f].length[k]));
  }
  CHECK((back.thumb.planeNormal - s.thumb.planeNormal).norm() < 1e-12);
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    CHECK(back.romMin[i] == doctest::Approx(s.romMin[i]));
    CHECK(back.romMax[i] == doctest::Approx(s.romMax[i]));
  }

  const HandSkeleton patched =
      skeleton_from_json_string(R"({"fingers": {"index": {"lengths": [50, 26, 23]}}})");
  CHECK(patched.fingers[0].length[0] == doctest::Approx(50.0));
  CHECK(patched.fingers[0].length[1] == doctest::Approx(26.0));
  CHECK(patched.fingers[1].length[0] == doctest::Approx(s.fingers[1].length[0]));

  CHECK_THROWS_AS((void)skeleton_from_json_string(R"({"finger": {}})"), emgpose::ConfigError);
  CHECK_THROWS_AS((void)skeleton_from_json_string("not json"), emgpose::ConfigError);
}

TEST_CASE("skeleton validation rejects broken geometry") {
  HandSkeleton s = default_skeleton();
  s.fingers[1].length[2] = -1.0;
  CHECK_THROWS_AS(validate(s), DataError);

  HandSkeleton s2 = default_skeleton();
  s2.restPose[0] = s2.romMax[0] + 1.0;
  CHECK_THROWS_AS(validate(s2), DataError);

  HandSkeleton s3 = default_skeleton();
  s3.restPose.set_finger(0, 2, 0.05);  // rest flexion lifts markers off plane K
  CHECK_THROWS_AS(validate(s3), DataError);

  CHECK_NOTHROW(validate(default_skeleton()));
}
