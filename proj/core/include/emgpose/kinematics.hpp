#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace emgpose {
class Rng;
}

namespace emgpose::kin {

// 29 degrees of freedom, radians, laid out as:
//   [0..2]   wrist rotations about x, y, z (intrinsic x -> y -> z)
//   [3..22]  four fingers (index, middle, ring, little), each
//            (alpha, beta, gamma, delta, epsilon): alpha pronates the flexion
//            plane about the finger's long axis, beta deviates it radially,
//            gamma/delta/epsilon are the MP/PIP/DIP flexions in that plane
//   [23..28] thumb, three joints (MP, PIP, DIP), each (flexion, abduction)
inline constexpr std::size_t kNumJoints = 29;
inline constexpr std::size_t kNumFingers = 4;

struct JointAngles {
  std::array<double, kNumJoints> v{};  // radians

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  double wrist(std::size_t axis) const { return v[axis]; }
  double finger(std::size_t f, std::size_t k) const { return v[3 + 5 * f + k]; }
  double thumb(std::size_t k) const { return v[23 + k]; }
  void set_finger(std::size_t f, std::size_t k, double val) { v[3 + 5 * f + k] = val; }
};

/// Column names used in angle CSV files, index-aligned with JointAngles.
const std::array<std::string, kNumJoints>& joint_names();

struct Plane {
  Eigen::Vector3d point;
  Eigen::Vector3d normal;  // unit
};

struct Line {
  Eigen::Vector3d point;
  Eigen::Vector3d dir;  // unit
};

struct FingerGeometry {
  Eigen::Vector3d base;          // MP joint center, hand frame, mm
  std::array<double, 3> length;  // proximal, middle, distal phalanx, mm
};

struct ThumbGeometry {
  Eigen::Vector3d base;          // proximal joint center, hand frame, mm
  Eigen::Vector3d restDir;       // unit chain direction at rest, in plane T
  Eigen::Vector3d planeNormal;   // unit normal of plane T (the t line direction)
  std::array<double, 3> length;  // segment lengths, mm
};

/// Hand geometry, marker attachment, and reference planes/lines. Markers sit
/// at joint centers: per finger MP/PIP/DIP/TIP, thumb likewise, one dorsum
/// marker, two forearm markers (the forearm is the world frame here).
/// The concrete constructions of planes W/K/H/Q/T and lines w/k/h/q/t are an
/// interpretation: the hand frame is x = radial (knuckle line), y = distal,
/// z = dorsal; K/H/Q are the z = 0 dorsum plane through the finger bases and
/// a zero-angle flexion plane is perpendicular to its defining line (k for
/// index and middle, h for ring, q for little, direction x); plane T holds
/// the thumb chain at rest and is perpendicular to line t.
struct HandSkeleton {
  std::array<FingerGeometry, kNumFingers> fingers;  // index, middle, ring, little
  ThumbGeometry thumb;
  Eigen::Vector3d dorsumMarker;
  std::array<Eigen::Vector3d, 2> forearmMarkers;
  Plane planeW, planeK, planeH, planeQ, planeT;
  Line lineW, lineK, lineH, lineQ, lineT;
  JointAngles restPose;
  std::array<double, kNumJoints> romMin{};  // radians
  std::array<double, kNumJoints> romMax{};

  // Sigmoid gate calibration for the phase-2 refinement: gate =
  // logistic((zeta_mm - gateCenterMm) / gateScaleMm). Calibration constants,
  // not anatomy.
  double gateCenterMm = 5.0;
  double gateScaleMm = 2.0;
};

/// Average adult-hand defaults; every test and the CLI default to this.
HandSkeleton default_skeleton();

/// Normalizes the thumb frame and rebuilds the derived planes W/K/H/Q/T and
/// lines w/k/h/q/t from the geometry. Call after mutating geometry fields.
void finalize_reference_frames(HandSkeleton& skeleton);

/// Checks invariants: positive lengths, unit normals, rest markers on their
/// zero planes. Throws DataError on violation.
void validate(const HandSkeleton& skeleton);

HandSkeleton skeleton_from_json_string(const std::string& text);
std::string skeleton_to_json_string(const HandSkeleton& skeleton);
HandSkeleton load_skeleton(const std::string& path);
void save_skeleton(const std::string& path, const HandSkeleton& skeleton);

struct MarkerFrame {
  std::vector<std::string> labels;
  std::vector<Eigen::Vector3d> positions;  // mm

  const Eigen::Vector3d& at(const std::string& label) const;  // DataError if missing
  bool has(const std::string& label) const;
};

/// Marker labels emitted by fka, 21 hand markers then 2 forearm markers.
const std::vector<std::string>& marker_labels();

enum class RomPolicy { Clamp, Strict };

/// Forward kinematics: hand markers from joint angles. Out-of-range angles
/// are clamped (Clamp) or rejected (Strict); `clampedJoints`, when given,
/// receives the indices that were clamped.
MarkerFrame fka(const JointAngles& angles, const HandSkeleton& skeleton,
                RomPolicy policy = RomPolicy::Clamp,
                std::vector<std::size_t>* clampedJoints = nullptr);

/// Wrist rotation matrix Rx(a) * Ry(b) * Rz(c) for angles (a, b, c).
Eigen::Matrix3d wrist_rotation(double ax, double ay, double az);

/// Phase 1: closed-form wrist extraction from the rigid hand markers
/// (finger bases, thumb base, dorsum). Exact for noiseless data.
std::array<double, 3> ika_wrist(const MarkerFrame& markers, const HandSkeleton& skeleton);

struct FingerSolveInfo {
  int evaluations = 0;
  bool converged = true;
  double residualMm = 0.0;    // mean marker error after gating
  double zetaMm = 0.0;        // mean marker distance from the principal direction
  double gate = 1.0;
};

/// Phase 2: one finger (0 index .. 3 little) from markers already expressed
/// in the hand frame (wrist solved and removed). Bounded local least-squares
/// over (alpha, beta) with budget limits (500 evaluations, function tolerance
/// 1e-1 mm, optimality tolerance 1e-6), then the sigmoid refinement
/// alpha1 = alpha0 * gate(zeta), beta1 = beta0 * gate(zeta), then the
/// in-plane flexions (gamma, delta, epsilon).
std::array<double, 5> ika_finger(const MarkerFrame& handFrameMarkers,
                                 const HandSkeleton& skeleton,
                                 std::size_t finger,
                                 FingerSolveInfo* info = nullptr);

/// Phase 3: closed-form thumb angles from hand-frame markers. Exact.
std::array<double, 6> ika_thumb(const MarkerFrame& handFrameMarkers,
                                const HandSkeleton& skeleton);

struct IkaResult {
  JointAngles angles;
  double residualMm = 0.0;                    // mean over the 21 hand markers
  std::array<double, 3> perPhaseResidual{};   // wrist-rigid, fingers, thumb
  bool fingersConverged = true;
};

/// Full inverse kinematics: phases 1 (wrist), 2 (fingers), 3 (thumb).
IkaResult ika(const MarkerFrame& markers, const HandSkeleton& skeleton);

/// (angles - rest) / 45 degrees, elementwise; `denormalize_angles` inverts.
Eigen::VectorXd normalize_angles(const JointAngles& angles, const JointAngles& restPose);
JointAngles denormalize_angles(const Eigen::VectorXd& normalized, const JointAngles& restPose);

/// Uniform random pose within the skeleton's range of motion.
JointAngles random_pose(const HandSkeleton& skeleton, emgpose::Rng& rng);

}  // namespace emgpose::kin
