#ifndef MRTA_NAV_HPP_
#define MRTA_NAV_HPP_

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

#include "mrta/domain.hpp"

// Double-integrator navigation: LQR tracking plus pairwise repulsion.
//
// Every robot obeys p' = v, v' = u with state z = (x, y, vx, vy). The fleet
// matrices are block diagonal (I_N kron A, I_N kron B), so one 4x4 Riccati
// solve gives the gain for every robot.
namespace mrta::nav {

using Mat4 = Eigen::Matrix4d;
using Mat2 = Eigen::Matrix2d;
using Gain = Eigen::Matrix<double, 2, 4>;
using Vec4 = Eigen::Vector4d;

Mat4 double_integrator_a();
Eigen::Matrix<double, 4, 2> double_integrator_b();

struct LqrGain {
  Gain k = Gain::Zero();
  Mat4 p = Mat4::Zero();
  double residual = 0.0;  // Frobenius norm of the Riccati residual at p
};

// ||A'P + PA - P B R^-1 B' P + Q||_F for the double integrator.
double care_residual(const Mat4& p, const Mat4& q, const Mat2& r);

// Solves the continuous-time algebraic Riccati equation for the single-robot
// double integrator by Newton-Kleinman iteration started from a stabilizing
// gain. Throws ValidationError for malformed weights and SolverError when the
// iteration does not reach a stabilizing solution with residual <= 1e-8.
LqrGain solve_care(const Mat4& q, const Mat2& r);

LqrGain gain_from_config(const WorldConfig& cfg);

struct NavCommand {
  Vec2 u = Vec2::Zero();
};

struct RobotKinematics {
  int id = 0;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

using FleetSnapshot = std::vector<RobotKinematics>;

void validate_fleet(const FleetSnapshot& fleet);

// Total repulsive potential: sum over unordered pairs closer than d_min of
// 0.5 * k_rep * (1/d - 1/d_min)^2.
double repulsive_potential(const FleetSnapshot& fleet, double d_min, double k_rep);

// Negative gradient of the total potential with respect to the position of
// fleet[i]. Throws DegenerateGeometryError when two robots coincide.
Vec2 apf_force(std::size_t i, const FleetSnapshot& fleet, double d_min, double k_rep);

// Forces on every robot. The serial version is the reference; the OpenMP
// version parallelizes over robots and sums neighbours in the same order, so
// both return bit-identical results.
std::vector<Vec2> apf_forces_serial(const FleetSnapshot& fleet, double d_min,
                                    double k_rep);
std::vector<Vec2> apf_forces(const FleetSnapshot& fleet, double d_min, double k_rep,
                             std::size_t parallel_threshold = 64);

struct Target {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

// Rescales a force so its magnitude does not exceed cap.
Vec2 cap_magnitude(const Vec2& f, double cap);

// clamp(-K (z - z_des) + capped repulsion, +-u_max), componentwise.
NavCommand tracking_command(const RobotKinematics& robot, const Target& target,
                            const LqrGain& gain, const Vec2& repulsion,
                            const WorldConfig& cfg);

// Velocity damping plus repulsion, for robots without a target. Parked robots
// use this so that approaching robots can push them aside.
NavCommand yield_command(const RobotKinematics& robot, const LqrGain& gain,
                         const Vec2& repulsion, const WorldConfig& cfg);

NavCommand control(std::size_t i, const FleetSnapshot& fleet, const Target& target,
                   const LqrGain& gain, const WorldConfig& cfg);

// Semi-implicit Euler: v <- clamp_norm(v + u dt, v_max); p <- p + v dt. Positions
// are clamped to the warehouse and the velocity component into a wall is
// zeroed.
FleetSnapshot step_dynamics(const FleetSnapshot& fleet,
                            const std::vector<NavCommand>& commands, double dt,
                            double v_max, double width, double height);

double min_pairwise_distance(const FleetSnapshot& fleet);

// One trajectory-dump line: t id x y vx vy ux uy, 9 significant digits.
void write_trajectory_record(std::ostream& out, double t, const RobotKinematics& robot,
                             const NavCommand& cmd);

}  // namespace mrta::nav

#endif  // MRTA_NAV_HPP_
