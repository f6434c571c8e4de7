#include "emgpose/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <json.hpp>

#include "emgpose/errors.hpp"
#include "emgpose/rng.hpp"

namespace emgpose::kin {
namespace {

using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

using json = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg45 = kPi / 4.0;

const std::array<std::string, kNumFingers> kFingerNames = {"index", "middle", "ring", "little"};
const std::array<std::string, 5> kFingerJointSuffix = {"alpha", "beta", "gamma", "delta", "epsilon"};
const std::array<std::string, 3> kThumbJointNames = {"mp", "pip", "dip"};

double wrap_pi(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

double clamp_unit(double x) { return std::min(1.0, std::max(-1.0, x)); }

Matrix3d rot_x(double a) {
  Matrix3d m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

Matrix3d rot_y(double a) {
  Matrix3d m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}

Matrix3d rot_z(double a) {
  Matrix3d m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Matrix3d rot_axis(const Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

// Flexion-plane frame for one finger. The plane starts perpendicular to the
// defining line (direction x at rest), is pronated by alpha about y and
// deviated by beta about the pronated z; flexions rotate about `axis` starting
// from `dir`.
void flexion_frame(double alpha, double beta, Vector3d& axis, Vector3d& dir) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  axis = Vector3d(-ca * cb, -sb, sa * cb);
  dir = Vector3d(-ca * sb, cb, sa * sb);
}

// Thumb joint rotation in its parent frame: flexion f about local y, then
// abduction g about the flexed local z.
Matrix3d thumb_joint(double f, double g) { return rot_y(f) * rot_z(g); }

Matrix3d thumb_rest_frame(const ThumbGeometry& t) {
  Matrix3d f;
  f.col(0) = t.restDir;
  f.col(2) = t.planeNormal;
  f.col(1) = t.planeNormal.cross(t.restDir);
  return f;
}

// Hand markers in the hand frame, no range checks. Order per marker_labels():
// 16 finger, 4 thumb, dorsum.
std::vector<Vector3d> build_hand_markers(const JointAngles& a, const HandSkeleton& s) {
  std::vector<Vector3d> out;
  out.reserve(21);
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    const FingerGeometry& geo = s.fingers[f];
    Vector3d axis, dir;
    flexion_frame(a.finger(f, 0), a.finger(f, 1), axis, dir);
    Vector3d p = geo.base;
    out.push_back(p);
    double cum = 0.0;
    for (std::size_t seg = 0; seg < 3; ++seg) {
      cum += a.finger(f, 2 + seg);
      p += geo.length[seg] * (rot_axis(axis, cum) * dir);
      out.push_back(p);
    }
  }
  Matrix3d frame = thumb_rest_frame(s.thumb);
  Vector3d p = s.thumb.base;
  out.push_back(p);
  for (std::size_t j = 0; j < 3; ++j) {
    frame = frame * thumb_joint(a.thumb(2 * j), a.thumb(2 * j + 1));
    p += s.thumb.length[j] * frame.col(0);
    out.push_back(p);
  }
  out.push_back(s.dorsumMarker);
  return out;
}

// Orthonormal frame from the two finger-base markers spanning the knuckle
// line plus the dorsum marker; rotation-equivariant, so observed-vs-rest
// frames give the wrist rotation directly.
Matrix3d rigid_triad(const Vector3d& idxMp, const Vector3d& ltlMp, const Vector3d& dorsum) {
  Vector3d x = idxMp - ltlMp;
  Vector3d n = (idxMp - dorsum).cross(ltlMp - dorsum);
  if (x.norm() < 1e-9 || n.norm() < 1e-9)
    throw DataError("wrist markers are degenerate (coincident or collinear)");
  x.normalize();
  n = (n - n.dot(x) * x).normalized();
  Matrix3d t;
  t.col(0) = x;
  t.col(1) = n.cross(x);
  t.col(2) = n;
  return t;
}

struct FingerObservation {
  std::array<Vector3d, 4> rel;  // marker positions relative to the finger base
};

// In-plane flexion chain for a fixed plane (axis, dir): project markers onto
// the plane, then read cumulative rotation angles segment by segment.
// Returns cumulative angles; also reconstructs the chain for the residual.
struct ChainFit {
  std::array<double, 3> cumulative{};
  std::array<Vector3d, 4> rebuilt{};  // relative to base
  double meanErrMm = 0.0;
};

ChainFit fit_chain(const FingerObservation& obs, const FingerGeometry& geo,
                   const Vector3d& axis, const Vector3d& dir) {
  ChainFit fit;
  std::array<Vector3d, 4> proj;
  for (int i = 0; i < 4; ++i) proj[i] = obs.rel[i] - obs.rel[i].dot(axis) * axis;
  double prev = 0.0;
  for (int j = 0; j < 3; ++j) {
    Vector3d seg = proj[j + 1] - proj[j];
    double cum = prev;
    if (seg.norm() > 1e-12)
      cum = std::atan2(dir.cross(seg).dot(axis), dir.dot(seg));
    fit.cumulative[j] = cum;
    prev = cum;
  }
  fit.rebuilt[0] = Vector3d::Zero();
  for (int j = 0; j < 3; ++j)
    fit.rebuilt[j + 1] =
        fit.rebuilt[j] + geo.length[j] * (rot_axis(axis, fit.cumulative[j]) * dir);
  double err = 0.0;
  for (int i = 0; i < 4; ++i) err += (fit.rebuilt[i] - obs.rel[i]).norm();
  fit.meanErrMm = err / 4.0;
  return fit;
}

struct PlaneEval {
  Eigen::Matrix<double, 12, 1> residual;
  double meanErrMm;
};

PlaneEval eval_plane(const FingerObservation& obs, const FingerGeometry& geo,
                     double alpha, double beta) {
  Vector3d axis, dir;
  flexion_frame(alpha, beta, axis, dir);
  ChainFit fit = fit_chain(obs, geo, axis, dir);
  PlaneEval ev;
  for (int i = 0; i < 4; ++i) ev.residual.segment<3>(3 * i) = fit.rebuilt[i] - obs.rel[i];
  ev.meanErrMm = fit.meanErrMm;
  return ev;
}

}  // namespace

const std::array<std::string, kNumJoints>& joint_names() {
  static const std::array<std::string, kNumJoints> names = [] {
    std::array<std::string, kNumJoints> n;
    n[0] = "wrist_x";
    n[1] = "wrist_y";
    n[2] = "wrist_z";
    std::size_t k = 3;
    for (const auto& f : kFingerNames)
      for (const auto& s : kFingerJointSuffix) n[k++] = f + "_" + s;
    for (const auto& j : kThumbJointNames) {
      n[k++] = "thumb_" + j + "_flex";
      n[k++] = "thumb_" + j + "_abd";
    }
    return n;
  }();
  return names;
}

const std::vector<std::string>& marker_labels() {
  static const std::vector<std::string> labels = [] {
    std::vector<std::string> l;
    const std::array<std::string, 4> seg = {"mp", "pip", "dip", "tip"};
    for (const auto& f : kFingerNames)
      for (const auto& s : seg) l.push_back(f + "_" + s);
    for (const auto& s : seg) l.push_back("thumb_" + s);
    l.push_back("hand_dorsum");
    l.push_back("forearm_1");
    l.push_back("forearm_2");
    return l;
  }();
  return labels;
}

const Eigen::Vector3d& MarkerFrame::at(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return positions[i];
  throw DataError("missing marker: " + label);
}

bool MarkerFrame::has(const std::string& label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

HandSkeleton default_skeleton() {
  HandSkeleton s;
  s.fingers[0] = {Vector3d(25, 85, 0), {45, 25, 22}};
  s.fingers[1] = {Vector3d(8, 88, 0), {50, 30, 24}};
  s.fingers[2] = {Vector3d(-10, 85, 0), {46, 28, 23}};
  s.fingers[3] = {Vector3d(-27, 78, 0), {36, 22, 20}};
  s.thumb.base = Vector3d(45, 25, 0);
  s.thumb.restDir = Vector3d(0.8, 0.6, 0);
  // Thumb plane tilted 40 degrees out of the dorsum plane about the rest
  // direction.
  const double tilt = 40.0 * kPi / 180.0;
  s.thumb.planeNormal =
      std::cos(tilt) * Vector3d(0, 0, 1) + std::sin(tilt) * Vector3d(-0.6, 0.8, 0);
  s.thumb.length = {46, 32, 25};
  s.dorsumMarker = Vector3d(0, 40, 0);
  s.forearmMarkers = {Vector3d(0, -60, 0), Vector3d(25, -75, 0)};

  // Wrist y stays well inside +-90 degrees so the x->y->z decomposition never
  // approaches its gimbal singularity.
  auto deg = [](double d) { return d * kPi / 180.0; };
  s.romMin[0] = -deg(70);
  s.romMax[0] = deg(70);
  s.romMin[1] = -deg(45);
  s.romMax[1] = deg(45);
  s.romMin[2] = -deg(90);
  s.romMax[2] = deg(90);
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    const std::size_t o = 3 + 5 * f;
    s.romMin[o + 0] = -deg(10);
    s.romMax[o + 0] = deg(10);
    s.romMin[o + 1] = -deg(10);
    s.romMax[o + 1] = deg(10);
    s.romMin[o + 2] = -deg(15);
    s.romMax[o + 2] = deg(90);
    s.romMin[o + 3] = 0.0;
    s.romMax[o + 3] = deg(100);
    s.romMin[o + 4] = 0.0;
    s.romMax[o + 4] = deg(80);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    s.romMin[23 + 2 * j] = -deg(30);
    s.romMax[23 + 2 * j] = deg(60);
    s.romMin[24 + 2 * j] = -deg(30);
    s.romMax[24 + 2 * j] = deg(30);
  }

  finalize_reference_frames(s);
  return s;
}

void finalize_reference_frames(HandSkeleton& s) {
  if (s.thumb.restDir.norm() < 1e-12 || s.thumb.planeNormal.norm() < 1e-12)
    throw DataError("thumb frame vectors must be nonzero");
  s.thumb.restDir.normalize();
  Vector3d n = s.thumb.planeNormal - s.thumb.planeNormal.dot(s.thumb.restDir) * s.thumb.restDir;
  if (n.norm() < 1e-12) throw DataError("thumb plane normal is parallel to the rest direction");
  s.thumb.planeNormal = n.normalized();

  const Vector3d xhat(1, 0, 0), zhat(0, 0, 1), origin(0, 0, 0);
  s.planeW = {origin, zhat};
  s.lineW = {origin, xhat};
  s.planeK = {s.fingers[0].base, zhat};
  s.lineK = {s.fingers[0].base, xhat};
  s.planeH = {s.fingers[2].base, zhat};
  s.lineH = {s.fingers[2].base, xhat};
  s.planeQ = {s.fingers[3].base, zhat};
  s.lineQ = {s.fingers[3].base, xhat};
  s.planeT = {s.thumb.base, s.thumb.planeNormal};
  s.lineT = {s.thumb.base, s.thumb.planeNormal};
}

void validate(const HandSkeleton& s) {
  auto finite3 = [](const Vector3d& v) { return v.allFinite(); };
  for (const auto& f : s.fingers) {
    if (!finite3(f.base)) throw DataError("finger base is not finite");
    for (double l : f.length)
      if (!(l > 0.0) || !std::isfinite(l)) throw DataError("finger segment lengths must be positive");
  }
  for (double l : s.thumb.length)
    if (!(l > 0.0) || !std::isfinite(l)) throw DataError("thumb segment lengths must be positive");
  if (!finite3(s.thumb.base) || !finite3(s.dorsumMarker) || !finite3(s.forearmMarkers[0]) ||
      !finite3(s.forearmMarkers[1]))
    throw DataError("skeleton points must be finite");
  if (std::abs(s.thumb.restDir.norm() - 1.0) > 1e-9 ||
      std::abs(s.thumb.planeNormal.norm() - 1.0) > 1e-9 ||
      std::abs(s.thumb.restDir.dot(s.thumb.planeNormal)) > 1e-9)
    throw DataError("thumb frame must be orthonormal");
  if (!(s.gateScaleMm > 0.0)) throw DataError("gate scale must be positive");
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (!(s.romMin[i] <= s.romMax[i])) throw DataError("range of motion must have min <= max");
    if (s.restPose[i] < s.romMin[i] || s.restPose[i] > s.romMax[i])
      throw DataError("rest pose must lie within the range of motion");
  }

  // Rest markers must lie on their planes: fingers on K/H/Q, thumb on T.
  const std::vector<Vector3d> rest = build_hand_markers(s.restPose, s);
  const std::array<const Plane*, 4> planes = {&s.planeK, &s.planeK, &s.planeH, &s.planeQ};
  for (std::size_t f = 0; f < kNumFingers; ++f)
    for (std::size_t m = 0; m < 4; ++m) {
      const double d = (rest[4 * f + m] - planes[f]->point).dot(planes[f]->normal);
      if (std::abs(d) > 1e-6) throw DataError("rest pose finger markers must lie on their plane");
    }
  for (std::size_t m = 0; m < 4; ++m) {
    const double d = (rest[16 + m] - s.planeT.point).dot(s.planeT.normal);
    if (std::abs(d) > 1e-6) throw DataError("rest pose thumb markers must lie on plane T");
  }
}

MarkerFrame fka(const JointAngles& angles, const HandSkeleton& skeleton, RomPolicy policy,
                std::vector<std::size_t>* clampedJoints) {
  JointAngles a = angles;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (a[i] < skeleton.romMin[i] || a[i] > skeleton.romMax[i]) {
      if (policy == RomPolicy::Strict)
        throw DataError("joint angle out of range: " + joint_names()[i]);
      a[i] = std::min(skeleton.romMax[i], std::max(skeleton.romMin[i], a[i]));
      if (clampedJoints) clampedJoints->push_back(i);
    }
  }
  const Matrix3d rw = wrist_rotation(a[0], a[1], a[2]);
  const std::vector<Vector3d> hand = build_hand_markers(a, skeleton);
  MarkerFrame frame;
  frame.labels = marker_labels();
  frame.positions.reserve(frame.labels.size());
  for (const Vector3d& p : hand) frame.positions.push_back(rw * p);
  frame.positions.push_back(skeleton.forearmMarkers[0]);
  frame.positions.push_back(skeleton.forearmMarkers[1]);
  return frame;
}

Eigen::Matrix3d wrist_rotation(double ax, double ay, double az) {
  return rot_x(ax) * rot_y(ay) * rot_z(az);
}

std::array<double, 3> ika_wrist(const MarkerFrame& markers, const HandSkeleton& skeleton) {
  const Matrix3d restT =
      rigid_triad(skeleton.fingers[0].base, skeleton.fingers[3].base, skeleton.dorsumMarker);
  const Matrix3d obsT =
      rigid_triad(markers.at("index_mp"), markers.at("little_mp"), markers.at("hand_dorsum"));
  const Matrix3d r = obsT * restT.transpose();
  // r = Rx(a) Ry(b) Rz(c): r02 = sin b, r12 = -sin a cos b, r22 = cos a cos b,
  // r01 = -cos b sin c, r00 = cos b cos c.
  const double b = std::asin(clamp_unit(r(0, 2)));
  const double a = std::atan2(-r(1, 2), r(2, 2));
  const double c = std::atan2(-r(0, 1), r(0, 0));
  return {a, b, c};
}

std::array<double, 5> ika_finger(const MarkerFrame& handFrameMarkers, const HandSkeleton& skeleton,
                                 std::size_t finger, FingerSolveInfo* info) {
  if (finger >= kNumFingers) throw DataError("finger index out of range");
  const FingerGeometry& geo = skeleton.fingers[finger];
  const std::array<std::string, 4> seg = {"mp", "pip", "dip", "tip"};
  FingerObservation obs;
  for (int i = 0; i < 4; ++i)
    obs.rel[i] = handFrameMarkers.at(kFingerNames[finger] + "_" + seg[i]) - geo.base;

  Vector3d mean = Vector3d::Zero();
  for (const auto& w : obs.rel) mean += w;
  mean /= 4.0;
  Matrix3d cov = Matrix3d::Zero();
  for (const auto& w : obs.rel) cov += (w - mean) * (w - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix3d> eig(cov);
  const Vector3d evals = eig.eigenvalues();  // ascending

  // zeta: mean marker distance from the principal direction; drives the
  // sigmoid gate that suppresses plane angles for near-straight fingers.
  const Vector3d principal = eig.eigenvectors().col(2);
  double zeta = 0.0;
  for (const auto& w : obs.rel) {
    const Vector3d c = w - mean;
    zeta += (c - c.dot(principal) * principal).norm();
  }
  zeta /= 4.0;

  const std::size_t o = 3 + 5 * finger;
  const Vector2d lo(skeleton.romMin[o], skeleton.romMin[o + 1]);
  const Vector2d hi(skeleton.romMax[o], skeleton.romMax[o + 1]);
  auto boxed = [&](Vector2d x) {
    return Vector2d(std::min(hi.x(), std::max(lo.x(), x.x())),
                    std::min(hi.y(), std::max(lo.y(), x.y())));
  };

  // Closed-form plane estimate from the smallest-variance direction; the
  // flexion axis has a negative x component throughout the range of motion,
  // which fixes the eigenvector sign. Near-collinear markers leave the plane
  // unobservable, so start from zero.
  Vector2d x(0.0, 0.0);
  if (evals(1) > 1e-9 + 1e-12 * evals(2)) {
    Vector3d n = eig.eigenvectors().col(0);
    if (n.x() > 0.0) n = -n;
    x = boxed(Vector2d(std::atan2(n.z(), -n.x()), std::asin(clamp_unit(-n.y()))));
  }

  // Bounded least-squares refinement over (alpha, beta), Levenberg steps with
  // numeric Jacobians. Budgets: 500 evaluations, 0.1 mm function tolerance,
  // 1e-6 gradient tolerance.
  constexpr int kMaxEvals = 500;
  constexpr double kFTol = 1e-1;
  constexpr double kOptTol = 1e-6;
  int evalCount = 0;
  auto evalAt = [&](const Vector2d& p) {
    ++evalCount;
    return eval_plane(obs, geo, p.x(), p.y());
  };
  PlaneEval cur = evalAt(x);
  bool converged = false;
  double lambda = -1.0;
  while (evalCount + 4 <= kMaxEvals && !converged) {
    Eigen::Matrix<double, 12, 2> jac;
    const double h = 1e-6;
    for (int k = 0; k < 2; ++k) {
      Vector2d pp = x, pm = x;
      pp(k) += h;
      pm(k) -= h;
      jac.col(k) = (evalAt(pp).residual - evalAt(pm).residual) / (2.0 * h);
    }
    const Vector2d grad = jac.transpose() * cur.residual;
    if (grad.lpNorm<Eigen::Infinity>() < kOptTol) {
      converged = true;
      break;
    }
    const Matrix2d jtj = jac.transpose() * jac;
    if (lambda < 0.0) lambda = 1e-3 * (jtj.trace() / 2.0 + 1e-12);
    bool accepted = false;
    while (evalCount < kMaxEvals) {
      const Matrix2d a = jtj + lambda * Matrix2d::Identity();
      const Vector2d step = a.ldlt().solve(-grad);
      const Vector2d xNew = boxed(x + step);
      const PlaneEval trial = evalAt(xNew);
      if (trial.meanErrMm < cur.meanErrMm) {
        const double decrease = cur.meanErrMm - trial.meanErrMm;
        x = xNew;
        cur = trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (decrease < kFTol) converged = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e10) {
        // No improving step exists from here; treat as a local minimum.
        converged = true;
        break;
      }
    }
    if (!accepted) break;
  }

  const double gate =
      1.0 / (1.0 + std::exp(-(zeta - skeleton.gateCenterMm) / skeleton.gateScaleMm));
  const Vector2d gated(gate * x.x(), gate * x.y());

  Vector3d axis, dir;
  flexion_frame(gated.x(), gated.y(), axis, dir);
  const ChainFit fit = fit_chain(obs, geo, axis, dir);
  const double gamma = wrap_pi(fit.cumulative[0]);
  const double delta = wrap_pi(fit.cumulative[1] - fit.cumulative[0]);
  const double eps = wrap_pi(fit.cumulative[2] - fit.cumulative[1]);

  if (info) {
    info->evaluations = evalCount;
    info->converged = converged;
    info->residualMm = fit.meanErrMm;
    info->zetaMm = zeta;
    info->gate = gate;
  }
  return {gated.x(), gated.y(), gamma, delta, eps};
}

std::array<double, 6> ika_thumb(const MarkerFrame& handFrameMarkers, const HandSkeleton& skeleton) {
  const std::array<std::string, 4> seg = {"mp", "pip", "dip", "tip"};
  std::array<Vector3d, 4> m;
  for (int i = 0; i < 4; ++i) m[i] = handFrameMarkers.at("thumb_" + seg[i]);
  Matrix3d frame = thumb_rest_frame(skeleton.thumb);
  std::array<double, 6> out{};
  for (int j = 0; j < 3; ++j) {
    Vector3d u = frame.transpose() * (m[j + 1] - m[j]);
    const double n = u.norm();
    if (n < 1e-9) throw DataError("coincident thumb markers");
    u /= n;
    const double g = std::asin(clamp_unit(u.y()));
    const double f = std::atan2(-u.z(), u.x());
    out[2 * j] = f;
    out[2 * j + 1] = g;
    frame = frame * thumb_joint(f, g);
  }
  return out;
}

IkaResult ika(const MarkerFrame& markers, const HandSkeleton& skeleton) {
  IkaResult res;
  const std::array<double, 3> w = ika_wrist(markers, skeleton);
  res.angles[0] = w[0];
  res.angles[1] = w[1];
  res.angles[2] = w[2];
  const Matrix3d rwT = wrist_rotation(w[0], w[1], w[2]).transpose();

  MarkerFrame hand;
  hand.labels = markers.labels;
  hand.positions.reserve(markers.positions.size());
  for (const auto& p : markers.positions) hand.positions.push_back(rwT * p);

  // Phase residual 0: the rigid markers against their rest positions.
  const std::array<std::pair<std::string, Vector3d>, 6> rigid = {{
      {"index_mp", skeleton.fingers[0].base},
      {"middle_mp", skeleton.fingers[1].base},
      {"ring_mp", skeleton.fingers[2].base},
      {"little_mp", skeleton.fingers[3].base},
      {"thumb_mp", skeleton.thumb.base},
      {"hand_dorsum", skeleton.dorsumMarker},
  }};
  double r0 = 0.0;
  for (const auto& [label, rest] : rigid) r0 += (hand.at(label) - rest).norm();
  res.perPhaseResidual[0] = r0 / 6.0;

  double r1 = 0.0;
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    FingerSolveInfo info;
    const std::array<double, 5> fa = ika_finger(hand, skeleton, f, &info);
    for (std::size_t k = 0; k < 5; ++k) res.angles[3 + 5 * f + k] = fa[k];
    r1 += info.residualMm;
    res.fingersConverged = res.fingersConverged && info.converged;
  }
  res.perPhaseResidual[1] = r1 / kNumFingers;

  const std::array<double, 6> th = ika_thumb(hand, skeleton);
  for (std::size_t k = 0; k < 6; ++k) res.angles[23 + k] = th[k];

  const std::vector<Vector3d> rebuilt = build_hand_markers(res.angles, skeleton);
  const std::vector<std::string>& labels = marker_labels();
  double thumbErr = 0.0, total = 0.0;
  for (std::size_t i = 0; i < 21; ++i) {
    const double e = (rebuilt[i] - hand.at(labels[i])).norm();
    total += e;
    if (i >= 16 && i < 20) thumbErr += e;
  }
  res.perPhaseResidual[2] = thumbErr / 4.0;
  res.residualMm = total / 21.0;
  return res;
}

Eigen::VectorXd normalize_angles(const JointAngles& angles, const JointAngles& restPose) {
  Eigen::VectorXd out(kNumJoints);
  for (std::size_t i = 0; i < kNumJoints; ++i) out(i) = (angles[i] - restPose[i]) / kDeg45;
  return out;
}

JointAngles denormalize_angles(const Eigen::VectorXd& normalized, const JointAngles& restPose) {
  if (normalized.size() != static_cast<Eigen::Index>(kNumJoints))
    throw DataError("normalized pose must have 29 entries");
  JointAngles a;
  for (std::size_t i = 0; i < kNumJoints; ++i) a[i] = normalized(i) * kDeg45 + restPose[i];
  return a;
}

JointAngles random_pose(const HandSkeleton& skeleton, emgpose::Rng& rng) {
  JointAngles a;
  for (std::size_t i = 0; i < kNumJoints; ++i)
    a[i] = rng.uniform(skeleton.romMin[i], skeleton.romMax[i]);
  return a;
}

namespace {

json vec_to_json(const Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Vector3d vec_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number())
    throw ConfigError(what + " must be an array of three numbers");
  return Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::array<double, 3> len_from_json(const json& j, const std::string& what) {
  const Vector3d v = vec_from_json(j, what);
  return {v.x(), v.y(), v.z()};
}

std::size_t joint_index(const std::string& name) {
  const auto& names = joint_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw ConfigError("unknown joint name: " + name);
}

void apply_angle_map(const json& j, std::array<double, kNumJoints>& target,
                     const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be an object keyed by joint name");
  for (const auto& [key, val] : j.items()) {
    if (!val.is_number()) throw ConfigError(what + "." + key + " must be a number");
    target[joint_index(key)] = val.get<double>();
  }
}

}  // namespace

HandSkeleton skeleton_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("skeleton config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("skeleton config must be a JSON object");

  HandSkeleton s = default_skeleton();
  for (const auto& [key, val] : j.items()) {
    if (key == "fingers") {
      if (!val.is_object()) throw ConfigError("fingers must be an object keyed by finger name");
      for (const auto& [fname, fval] : val.items()) {
        const auto it = std::find(kFingerNames.begin(), kFingerNames.end(), fname);
        if (it == kFingerNames.end()) throw ConfigError("unknown finger name: " + fname);
        if (!fval.is_object()) throw ConfigError("fingers." + fname + " must be an object");
        FingerGeometry& geo = s.fingers[static_cast<std::size_t>(it - kFingerNames.begin())];
        for (const auto& [gkey, gval] : fval.items()) {
          if (gkey == "base")
            geo.base = vec_from_json(gval, "fingers." + fname + ".base");
          else if (gkey == "lengths")
            geo.length = len_from_json(gval, "fingers." + fname + ".lengths");
          else
            throw ConfigError("unknown key fingers." + fname + "." + gkey);
        }
      }
    } else if (key == "thumb") {
      if (!val.is_object()) throw ConfigError("thumb must be an object");
      for (const auto& [tkey, tval] : val.items()) {
        if (tkey == "base")
          s.thumb.base = vec_from_json(tval, "thumb.base");
        else if (tkey == "restDir")
          s.thumb.restDir = vec_from_json(tval, "thumb.restDir");
        else if (tkey == "planeNormal")
          s.thumb.planeNormal = vec_from_json(tval, "thumb.planeNormal");
        else if (tkey == "lengths")
          s.thumb.length = len_from_json(tval, "thumb.lengths");
        else
          throw ConfigError("unknown key thumb." + tkey);
      }
    } else if (key == "dorsumMarker") {
      s.dorsumMarker = vec_from_json(val, "dorsumMarker");
    } else if (key == "forearmMarkers") {
      if (!val.is_array() || val.size() != 2)
        throw ConfigError("forearmMarkers must be an array of two points");
      s.forearmMarkers[0] = vec_from_json(val[0], "forearmMarkers[0]");
      s.forearmMarkers[1] = vec_from_json(val[1], "forearmMarkers[1]");
    } else if (key == "restPoseRad") {
      apply_angle_map(val, s.restPose.v, "restPoseRad");
    } else if (key == "romMinRad") {
      apply_angle_map(val, s.romMin, "romMinRad");
    } else if (key == "romMaxRad") {
      apply_angle_map(val, s.romMax, "romMaxRad");
    } else if (key == "gateCenterMm") {
      if (!val.is_number()) throw ConfigError("gateCenterMm must be a number");
      s.gateCenterMm = val.get<double>();
    } else if (key == "gateScaleMm") {
      if (!val.is_number()) throw ConfigError("gateScaleMm must be a number");
      s.gateScaleMm = val.get<double>();
    } else {
      throw ConfigError("unknown skeleton config key: " + key);
    }
  }
  finalize_reference_frames(s);
  validate(s);
  return s;
}

std::string skeleton_to_json_string(const HandSkeleton& s) {
  json j;
  json fingers;
  for (std::size_t f = 0; f < kNumFingers; ++f) {
    fingers[kFingerNames[f]] = {
        {"base", vec_to_json(s.fingers[f].base)},
        {"lengths", json::array({s.fingers[f].length[0], s.fingers[f].length[1],
                                 s.fingers[f].length[2]})},
    };
  }
  j["fingers"] = fingers;
  j["thumb"] = {
      {"base", vec_to_json(s.thumb.base)},
      {"restDir", vec_to_json(s.thumb.restDir)},
      {"planeNormal", vec_to_json(s.thumb.planeNormal)},
      {"lengths", json::array({s.thumb.length[0], s.thumb.length[1], s.thumb.length[2]})},
  };
  j["dorsumMarker"] = vec_to_json(s.dorsumMarker);
  j["forearmMarkers"] =
      json::array({vec_to_json(s.forearmMarkers[0]), vec_to_json(s.forearmMarkers[1])});
  json rest, rmin, rmax;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    rest[joint_names()[i]] = s.restPose[i];
    rmin[joint_names()[i]] = s.romMin[i];
    rmax[joint_names()[i]] = s.romMax[i];
  }
  j["restPoseRad"] = rest;
  j["romMinRad"] = rmin;
  j["romMaxRad"] = rmax;
  j["gateCenterMm"] = s.gateCenterMm;
  j["gateScaleMm"] = s.gateScaleMm;
  return j.dump(2) + "\n";
}

HandSkeleton load_skeleton(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open skeleton config: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return skeleton_from_json_string(ss.str());
}

void save_skeleton(const std::string& path, const HandSkeleton& skeleton) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write skeleton config: " + path);
  out << skeleton_to_json_string(skeleton);
}

}  // namespace emgpose::kin
