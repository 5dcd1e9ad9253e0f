#ifndef SUPCAL_GEOMETRY_HPP
#define SUPCAL_GEOMETRY_HPP

#include <cmath>
#include <optional>

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "supcal/errors.hpp"

namespace supcal {

/// Rigid transform in SE(3), stored as an orthonormal rotation matrix plus a
/// translation vector (meters).
template <typename Scalar>
struct PoseT {
  Eigen::Matrix<Scalar, 3, 3> rotation = Eigen::Matrix<Scalar, 3, 3>::Identity();
  Eigen::Matrix<Scalar, 3, 1> translation = Eigen::Matrix<Scalar, 3, 1>::Zero();
};

/// Minimal se(3) parameterization: translational increment rho (meters) and
/// rotational increment phi (radians, axis times angle).
template <typename Scalar>
struct TwistT {
  Eigen::Matrix<Scalar, 3, 1> rho = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Eigen::Matrix<Scalar, 3, 1> phi = Eigen::Matrix<Scalar, 3, 1>::Zero();
};

/// Pinhole camera: focal lengths and principal point in pixels, image size
/// in whole pixels.
template <typename Scalar>
struct CameraIntrinsicsT {
  Scalar fx = Scalar(1);
  Scalar fy = Scalar(1);
  Scalar cx = Scalar(0);
  Scalar cy = Scalar(0);
  int width = 0;
  int height = 0;
};

/// Continuous image coordinates. May lie outside the image; visibility is a
/// separate predicate.
template <typename Scalar>
struct PixelT {
  Scalar u = Scalar(0);
  Scalar v = Scalar(0);
};

using Pose = PoseT<double>;
using Twist = TwistT<double>;
using CameraIntrinsics = CameraIntrinsicsT<double>;
using Pixel = PixelT<double>;

/// Points closer to the camera plane than this are treated as out of view.
inline constexpr double kMinDepth = 1e-3;

/// Rotation drift above this triggers re-orthonormalization in compose().
inline constexpr double kOrthonormalityTol = 1e-9;

/// Below this angle the exp/log maps switch to their series expansions.
inline constexpr double kSmallAngle = 1e-8;

/// se3_log refuses rotations with angle at or beyond pi minus this margin.
inline constexpr double kLogAngleMargin = 1e-6;

template <typename Scalar>
[[nodiscard]] Eigen::Matrix<Scalar, 3, 3> skew(
    const Eigen::Matrix<Scalar, 3, 1>& v) {
  Eigen::Matrix<Scalar, 3, 3> s;
  // clang-format off
  s << Scalar(0), -v.z(),     v.y(),
       v.z(),      Scalar(0), -v.x(),
       -v.y(),     v.x(),     Scalar(0);
  // clang-format on
  return s;
}

/// Maximum absolute deviation of R^T R from the identity.
template <typename Scalar>
[[nodiscard]] Scalar orthonormality_drift(
    const Eigen::Matrix<Scalar, 3, 3>& rotation) {
  const Eigen::Matrix<Scalar, 3, 3> gram = rotation.transpose() * rotation;
  return (gram - Eigen::Matrix<Scalar, 3, 3>::Identity()).cwiseAbs().maxCoeff();
}

/// Nearest orthonormal matrix with determinant +1 (polar factor via SVD).
template <typename Scalar>
[[nodiscard]] Eigen::Matrix<Scalar, 3, 3> orthonormalized(
    const Eigen::Matrix<Scalar, 3, 3>& rotation) {
  Eigen::JacobiSVD<Eigen::Matrix<Scalar, 3, 3>> svd(
      rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix<Scalar, 3, 3> r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < Scalar(0)) {
    Eigen::Matrix<Scalar, 3, 1> flip(Scalar(1), Scalar(1), Scalar(-1));
    r = svd.matrixU() * flip.asDiagonal() * svd.matrixV().transpose();
  }
  return r;
}

template <typename Scalar>
[[nodiscard]] bool is_valid_pose(const PoseT<Scalar>& pose,
                                 Scalar tol = Scalar(kOrthonormalityTol)) {
  return pose.rotation.allFinite() && pose.translation.allFinite() &&
         orthonormality_drift(pose.rotation) <= tol &&
         std::abs(pose.rotation.determinant() - Scalar(1)) <= tol;
}

/// SE(3) exponential map. Rodrigues closed form, series fallback below
/// kSmallAngle. Total on finite input.
template <typename Scalar>
[[nodiscard]] PoseT<Scalar> se3_exp(const TwistT<Scalar>& xi) {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  const Scalar theta2 = xi.phi.squaredNorm();
  const Scalar theta = std::sqrt(theta2);

  // R = I + A [phi]x + B [phi]x^2,  V = I + B [phi]x + C [phi]x^2
  Scalar a, b, c;
  if (theta < Scalar(kSmallAngle)) {
    a = Scalar(1) - theta2 / Scalar(6);
    b = Scalar(0.5) - theta2 / Scalar(24);
    c = Scalar(1) / Scalar(6) - theta2 / Scalar(120);
  } else {
    a = std::sin(theta) / theta;
    b = (Scalar(1) - std::cos(theta)) / theta2;
    c = (Scalar(1) - a) / theta2;
  }

  const Matrix3 k = skew(xi.phi);
  const Matrix3 k2 = k * k;
  PoseT<Scalar> pose;
  pose.rotation = Matrix3::Identity() + a * k + b * k2;
  const Matrix3 v = Matrix3::Identity() + b * k + c * k2;
  pose.translation = v * xi.rho;
  return pose;
}

/// SE(3) logarithm. Throws NearPiRotation for rotation angles at or beyond
/// pi - kLogAngleMargin, where the axis becomes ill-conditioned.
template <typename Scalar>
[[nodiscard]] TwistT<Scalar> se3_log(const PoseT<Scalar>& pose) {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  const Scalar trace = pose.rotation.trace();
  const Scalar cos_theta =
      std::clamp((trace - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Scalar theta = std::acos(cos_theta);
  if (theta >= Scalar(M_PI) - Scalar(kLogAngleMargin)) {
    throw NearPiRotation("se3_log: rotation angle too close to pi");
  }

  const Matrix3 anti = (pose.rotation - pose.rotation.transpose()) / Scalar(2);
  const Vector3 w(anti(2, 1), anti(0, 2), anti(1, 0));  // sin(theta) * axis

  TwistT<Scalar> xi;
  const Scalar theta2 = theta * theta;
  if (theta < Scalar(kSmallAngle)) {
    xi.phi = w * (Scalar(1) + theta2 / Scalar(6));
  } else {
    xi.phi = w * (theta / std::sin(theta));
  }

  // rho = V^{-1} t with V^{-1} = I - [phi]x/2 + c2 [phi]x^2
  Scalar c2;
  if (theta < Scalar(kSmallAngle)) {
    c2 = Scalar(1) / Scalar(12) + theta2 / Scalar(720);
  } else {
    c2 = (Scalar(1) -
          theta * std::sin(theta) / (Scalar(2) * (Scalar(1) - std::cos(theta)))) /
         theta2;
  }
  const Matrix3 k = skew(xi.phi);
  const Matrix3 v_inv =
      Matrix3::Identity() - k / Scalar(2) + c2 * (k * k);
  xi.rho = v_inv * pose.translation;
  return xi;
}

/// Composition: the result applies `b` first, then `a`. Re-orthonormalizes
/// the rotation when accumulated drift exceeds kOrthonormalityTol.
template <typename Scalar>
[[nodiscard]] PoseT<Scalar> compose(const PoseT<Scalar>& a,
                                    const PoseT<Scalar>& b) {
  PoseT<Scalar> out;
  out.rotation = a.rotation * b.rotation;
  if (orthonormality_drift(out.rotation) > Scalar(kOrthonormalityTol)) {
    out.rotation = orthonormalized(out.rotation);
  }
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

template <typename Scalar>
[[nodiscard]] PoseT<Scalar> inverse(const PoseT<Scalar>& pose) {
  PoseT<Scalar> out;
  out.rotation = pose.rotation.transpose();
  out.translation = -(out.rotation * pose.translation);
  return out;
}

template <typename Scalar>
[[nodiscard]] Eigen::Matrix<Scalar, 3, 1> transform_point(
    const PoseT<Scalar>& pose, const Eigen::Matrix<Scalar, 3, 1>& point) {
  return pose.rotation * point + pose.translation;
}

/// Pinhole projection of a camera-frame point. Empty when the point is at or
/// behind the near plane (z <= kMinDepth).
template <typename Scalar>
[[nodiscard]] std::optional<PixelT<Scalar>> project(
    const CameraIntrinsicsT<Scalar>& intr,
    const Eigen::Matrix<Scalar, 3, 1>& p_cam) {
  if (!(p_cam.z() > Scalar(kMinDepth))) {
    return std::nullopt;
  }
  PixelT<Scalar> px;
  px.u = intr.fx * p_cam.x() / p_cam.z() + intr.cx;
  px.v = intr.fy * p_cam.y() / p_cam.z() + intr.cy;
  return px;
}

/// True when the pixel lies inside the image rectangle.
template <typename Scalar>
[[nodiscard]] bool visible(const CameraIntrinsicsT<Scalar>& intr,
                           const PixelT<Scalar>& px) {
  return px.u >= Scalar(0) && px.u < Scalar(intr.width) && px.v >= Scalar(0) &&
         px.v < Scalar(intr.height);
}

/// Jacobian of the projected pixel with respect to a left-multiplied twist,
/// evaluated at a camera-frame point q: columns 0-2 are d/d rho, columns 3-5
/// are d/d phi. Empty when q is at or behind the near plane.
template <typename Scalar>
[[nodiscard]] std::optional<Eigen::Matrix<Scalar, 2, 6>> projection_jacobian_at(
    const CameraIntrinsicsT<Scalar>& intr,
    const Eigen::Matrix<Scalar, 3, 1>& q) {
  if (!(q.z() > Scalar(kMinDepth))) {
    return std::nullopt;
  }
  const Scalar inv_z = Scalar(1) / q.z();
  const Scalar inv_z2 = inv_z * inv_z;
  Eigen::Matrix<Scalar, 2, 3> d_pixel;
  // clang-format off
  d_pixel << intr.fx * inv_z, Scalar(0),       -intr.fx * q.x() * inv_z2,
             Scalar(0),       intr.fy * inv_z, -intr.fy * q.y() * inv_z2;
  // clang-format on
  Eigen::Matrix<Scalar, 3, 6> d_point;
  d_point.template leftCols<3>() = Eigen::Matrix<Scalar, 3, 3>::Identity();
  d_point.template rightCols<3>() = -skew(q);
  return Eigen::Matrix<Scalar, 2, 6>(d_pixel * d_point);
}

/// Jacobian of project(intr, exp(xi) * pose * point) with respect to xi at
/// xi = 0 (left-multiplied increment).
template <typename Scalar>
[[nodiscard]] std::optional<Eigen::Matrix<Scalar, 2, 6>> project_jacobian(
    const CameraIntrinsicsT<Scalar>& intr, const PoseT<Scalar>& pose,
    const Eigen::Matrix<Scalar, 3, 1>& point) {
  return projection_jacobian_at(intr, transform_point(pose, point));
}

template <typename Scalar>
struct PoseErrorT {
  Scalar translation = Scalar(0);  // meters
  Scalar rotation_deg = Scalar(0);
};

using PoseError = PoseErrorT<double>;

/// Translation distance and geodesic rotation angle (degrees) between poses.
template <typename Scalar>
[[nodiscard]] PoseErrorT<Scalar> pose_error(const PoseT<Scalar>& a,
                                            const PoseT<Scalar>& b) {
  PoseErrorT<Scalar> err;
  err.translation = (a.translation - b.translation).norm();
  const Eigen::Matrix<Scalar, 3, 3> rel = a.rotation * b.rotation.transpose();
  const Scalar cos_theta =
      std::clamp((rel.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  err.rotation_deg = std::acos(cos_theta) * Scalar(180) / Scalar(M_PI);
  return err;
}

}  // namespace supcal

#endif  // SUPCAL_GEOMETRY_HPP
