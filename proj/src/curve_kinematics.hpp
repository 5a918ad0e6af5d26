#pragma once

#include "geotubes/curves.hpp"

namespace geotubes::detail {

// Covariant kinematics of a curve at one parameter value.
struct Kinematics {
  Vec3 x;
  Vec3 vel;
  Vec3 acc;
  LocalGeometry geo;
  double speed = 0.0;
  Vec3 A;  // D_t x'
};

Kinematics kinematics(const ParamCurve& curve, double t);
// D_t A from the third derivative and Christoffel derivatives.
Vec3 covariant_jerk(const ParamCurve& curve, const Kinematics& k, double t);

}  // namespace geotubes::detail
