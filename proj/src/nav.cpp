#include "mrta/nav.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace mrta::nav {

Mat4 double_integrator_a() {
  Mat4 a = Mat4::Zero();
  a(0, 2) = 1.0;
  a(1, 3) = 1.0;
  return a;
}

Eigen::Matrix<double, 4, 2> double_integrator_b() {
  Eigen::Matrix<double, 4, 2> b = Eigen::Matrix<double, 4, 2>::Zero();
  b(2, 0) = 1.0;
  b(3, 1) = 1.0;
  return b;
}

double care_residual(const Mat4& p, const Mat4& q, const Mat2& r) {
  const Mat4 a = double_integrator_a();
  const auto b = double_integrator_b();
  const Mat4 res = a.transpose() * p + p * a - p * b * r.inverse() * b.transpose() * p + q;
  return res.norm();
}

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kResidualTol = 1e-8;
constexpr int kMaxNewtonIterations = 200;

// Solves M' X + X M = -C for X via the 16x16 Kronecker system.
Mat4 solve_lyapunov(const Mat4& m, const Mat4& c) {
  using Mat16 = Eigen::Matrix<double, 16, 16>;
  const Mat4 mt = m.transpose();
  const Mat4 eye = Mat4::Identity();
  Mat16 lhs;
  // vec(M'X) = (I kron M') vec(X), vec(XM) = (M' kron I) vec(X), column-major vec.
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      lhs.block<4, 4>(4 * i, 4 * j) = eye(i, j) * mt + mt(i, j) * eye;
    }
  }
  Eigen::Matrix<double, 16, 1> rhs = -Eigen::Map<const Eigen::Matrix<double, 16, 1>>(c.data());
  Eigen::PartialPivLU<Mat16> lu(lhs);
  Eigen::Matrix<double, 16, 1> x = lu.solve(rhs);
  Mat4 out = Eigen::Map<Mat4>(x.data());
  return 0.5 * (out + out.transpose());
}

double max_real_eigenvalue(const Mat4& m) {
  Eigen::EigenSolver<Mat4> es(m, false);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) worst = std::max(worst, es.eigenvalues()(i).real());
  return worst;
}

}  // namespace

LqrGain solve_care(const Mat4& q, const Mat2& r) {
  if (!q.allFinite() || !r.allFinite()) throw ValidationError("solve_care: non-finite weights");
  if ((q - q.transpose()).norm() > kSymmetryTol * std::max(1.0, q.norm())) {
    throw ValidationError("solve_care: Q is not symmetric");
  }
  if ((r - r.transpose()).norm() > kSymmetryTol * std::max(1.0, r.norm())) {
    throw ValidationError("solve_care: R is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat4> qe(q);
  if (qe.eigenvalues().minCoeff() < -kSymmetryTol * std::max(1.0, q.norm())) {
    throw ValidationError("solve_care: Q is not positive semidefinite");
  }
  Eigen::LLT<Mat2> rl(r);
  if (rl.info() != Eigen::Success) throw ValidationError("solve_care: R is not positive definite");

  const Mat4 a = double_integrator_a();
  const auto b = double_integrator_b();
  const Mat2 r_inv = r.inverse();

  // Per-axis gain [1, 2] puts both closed-loop poles at -1.
  Gain k = Gain::Zero();
  k(0, 0) = 1.0;
  k(1, 1) = 1.0;
  k(0, 2) = 2.0;
  k(1, 3) = 2.0;

  Mat4 p = Mat4::Zero();
  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    const Mat4 closed = a - b * k;
    const Mat4 rhs = q + k.transpose() * r * k;
    const Mat4 next = solve_lyapunov(closed, rhs);
    if (!next.allFinite()) break;
    const double step = (next - p).norm();
    p = next;
    k = r_inv * b.transpose() * p;
    if (step <= 1e-15 * std::max(1.0, p.norm())) break;
  }

  LqrGain out;
  out.p = p;
  out.k = k;
  out.residual = care_residual(p, q, r);
  const double stability = max_real_eigenvalue(a - b * k);
  if (!(out.residual <= kResidualTol) || !(stability < 0.0)) {
    std::ostringstream msg;
    msg << "solve_care: no stabilizing solution (residual " << out.residual
        << ", max closed-loop real part " << stability << ")";
    throw SolverError(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Mat4> pe(p);
  if (!(pe.eigenvalues().minCoeff() > 0.0)) {
    throw SolverError("solve_care: Riccati solution is not positive definite");
  }
  return out;
}

LqrGain gain_from_config(const WorldConfig& cfg) {
  Mat4 q = Mat4::Zero();
  for (int i = 0; i < 4; ++i) q(i, i) = cfg.q_diag[i];
  Mat2 r = Mat2::Zero();
  r(0, 0) = cfg.r_diag[0];
  r(1, 1) = cfg.r_diag[1];
  return solve_care(q, r);
}

void validate_fleet(const FleetSnapshot& fleet) {
  std::set<int> ids;
  for (const auto& rk : fleet) {
    if (!ids.insert(rk.id).second) {
      throw ValidationError("fleet snapshot: duplicate robot id " + std::to_string(rk.id));
    }
  }
}

double repulsive_potential(const FleetSnapshot& fleet, double d_min, double k_rep) {
  double total = 0.0;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    for (std::size_t j = i + 1; j < fleet.size(); ++j) {
      const double d = (fleet[i].position - fleet[j].position).norm();
      if (d < d_min) {
        const double g = 1.0 / d - 1.0 / d_min;
        total += 0.5 * k_rep * g * g;
      }
    }
  }
  return total;
}

Vec2 apf_force(std::size_t i, const FleetSnapshot& fleet, double d_min, double k_rep) {
  if (!(d_min > 0.0) || k_rep < 0.0) throw ValidationError("apf_force: need d_min > 0, k_rep >= 0");
  if (i >= fleet.size()) throw ValidationError("apf_force: robot index out of range");
  Vec2 force = Vec2::Zero();
  const Vec2& pi = fleet[i].position;
  for (std::size_t j = 0; j < fleet.size(); ++j) {
    if (j == i) continue;
    const Vec2 delta = pi - fleet[j].position;
    const double d = delta.norm();
    if (d == 0.0) {
      throw DegenerateGeometryError("apf_force: robots " + std::to_string(fleet[i].id) +
                                    " and " + std::to_string(fleet[j].id) + " coincide");
    }
    if (d >= d_min) continue;
    // -dU/dp_i = k (1/d - 1/d_min) / d^2 * (p_i - p_j) / d
    const double mag = k_rep * (1.0 / d - 1.0 / d_min) / (d * d);
    force += (mag / d) * delta;
  }
  return force;
}

std::vector<Vec2> apf_forces_serial(const FleetSnapshot& fleet, double d_min, double k_rep) {
  std::vector<Vec2> out(fleet.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) out[i] = apf_force(i, fleet, d_min, k_rep);
  return out;
}

std::vector<Vec2> apf_forces(const FleetSnapshot& fleet, double d_min, double k_rep,
                             std::size_t parallel_threshold) {
  const auto n = static_cast<std::ptrdiff_t>(fleet.size());
  std::vector<Vec2> out(fleet.size(), Vec2::Zero());
  std::atomic<bool> degenerate{false};
  std::string message;
#pragma omp parallel for schedule(static) if (fleet.size() >= parallel_threshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = apf_force(static_cast<std::size_t>(i), fleet, d_min, k_rep);
    } catch (const DegenerateGeometryError& e) {
#pragma omp critical(mrta_apf_error)
      if (!degenerate.exchange(true)) message = e.what();
    }
  }
  if (degenerate) throw DegenerateGeometryError(message);
  return out;
}

Vec2 cap_magnitude(const Vec2& f, double cap) {
  const double n = f.norm();
  if (n > cap) return f * (cap / n);
  return f;
}

namespace {

Vec2 clamp_components(const Vec2& u, double limit) {
  return Vec2(std::clamp(u.x(), -limit, limit), std::clamp(u.y(), -limit, limit));
}

}  // namespace

NavCommand tracking_command(const RobotKinematics& robot, const Target& target,
                            const LqrGain& gain, const Vec2& repulsion,
                            const WorldConfig& cfg) {
  Vec4 err;
  err << robot.position - target.position, robot.velocity - target.velocity;
  const Vec2 lqr = -gain.k * err;
  return NavCommand{clamp_components(lqr + cap_magnitude(repulsion, cfg.apf_force_cap), cfg.u_max)};
}

NavCommand yield_command(const RobotKinematics& robot, const LqrGain& gain,
                         const Vec2& repulsion, const WorldConfig& cfg) {
  const Vec2 damping = -gain.k.block<2, 2>(0, 2) * robot.velocity;
  return NavCommand{
      clamp_components(damping + cap_magnitude(repulsion, cfg.apf_force_cap), cfg.u_max)};
}

NavCommand control(std::size_t i, const FleetSnapshot& fleet, const Target& target,
                   const LqrGain& gain, const WorldConfig& cfg) {
  const Vec2 rep = apf_force(i, fleet, cfg.d_min, cfg.k_rep);
  return tracking_command(fleet[i], target, gain, rep, cfg);
}

FleetSnapshot step_dynamics(const FleetSnapshot& fleet, const std::vector<NavCommand>& commands,
                            double dt, double v_max, double width, double height) {
  if (!(dt > 0.0)) throw ValidationError("step_dynamics: dt must be positive");
  if (commands.size() != fleet.size()) {
    throw ValidationError("step_dynamics: one command per robot required");
  }
  FleetSnapshot next = fleet;
  for (std::size_t i = 0; i < next.size(); ++i) {
    auto& rk = next[i];
    Vec2 v = rk.velocity + commands[i].u * dt;
    const double speed = v.norm();
    if (speed > v_max) v *= v_max / speed;
    Vec2 p = rk.position + v * dt;
    if (p.x() < 0.0 || p.x() > width) {
      p.x() = std::clamp(p.x(), 0.0, width);
      v.x() = 0.0;
    }
    if (p.y() < 0.0 || p.y() > height) {
      p.y() = std::clamp(p.y(), 0.0, height);
      v.y() = 0.0;
    }
    rk.position = p;
    rk.velocity = v;
  }
  return next;
}

double min_pairwise_distance(const FleetSnapshot& fleet) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    for (std::size_t j = i + 1; j < fleet.size(); ++j) {
      best = std::min(best, (fleet[i].position - fleet[j].position).norm());
    }
  }
  return best;
}

void write_trajectory_record(std::ostream& out, double t, const RobotKinematics& robot,
                             const NavCommand& cmd) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(9) << t << ' ' << robot.id << ' ' << robot.position.x() << ' '
      << robot.position.y() << ' ' << robot.velocity.x() << ' ' << robot.velocity.y() << ' '
      << cmd.u.x() << ' ' << cmd.u.y() << '\n';
  out.flags(flags);
  out.precision(prec);
}

}  // namespace mrta::nav
