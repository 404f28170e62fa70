#include "fblup/matrix_util.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace fblup {

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& m) {
  if (m.rows() == 2 && m.cols() == 2) {
    // exp(aI + B) = e^a (cosh(mu) I + sinhc(mu) B) with B traceless,
    // mu^2 = -det(B); trigonometric branch when mu^2 < 0.
    const double a = 0.5 * (m(0, 0) + m(1, 1));
    Eigen::Matrix2d b = m;
    b(0, 0) -= a;
    b(1, 1) -= a;
    const double mu2 = -(b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0));
    double c, s;  // cosh(mu), sinh(mu)/mu
    if (mu2 > 1e-30) {
      const double mu = std::sqrt(mu2);
      c = std::cosh(mu);
      s = std::sinh(mu) / mu;
    } else if (mu2 < -1e-30) {
      const double om = std::sqrt(-mu2);
      c = std::cos(om);
      s = std::sin(om) / om;
    } else {
      c = 1.0;
      s = 1.0;
    }
    Eigen::Matrix2d out = c * Eigen::Matrix2d::Identity() + s * b;
    return std::exp(a) * out;
  }
  return m.exp();
}

std::optional<Eigen::MatrixXd> principal_log(const Eigen::MatrixXd& m, double chart_radius) {
  const Eigen::MatrixXd dev = m - Eigen::MatrixXd::Identity(m.rows(), m.cols());
  if (dev.norm() >= chart_radius) return std::nullopt;
  Eigen::MatrixXd l = m.log();
  if (!l.allFinite()) return std::nullopt;
  return l;
}

std::optional<Eigen::MatrixXd> log_proposal(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) return std::nullopt;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) return std::nullopt;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const auto ev = es.eigenvalues()[i];
    if (ev.real() <= 0.0 && std::abs(ev.imag()) < 1e-12) return std::nullopt;
  }
  Eigen::MatrixXd l = m.log();
  if (!l.allFinite()) return std::nullopt;
  return l;
}

}  // namespace fblup
