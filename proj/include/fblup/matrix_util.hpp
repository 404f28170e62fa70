#pragma once

#include <optional>

#include <Eigen/Dense>

namespace fblup {

/// Matrix exponential. Closed form for 2x2, scaling-and-squaring otherwise.
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& m);

/// Principal matrix logarithm, restricted to the certified chart
/// ||m - I||_F < chart_radius. Returns nullopt outside the chart or when the
/// computation produces non-finite entries.
std::optional<Eigen::MatrixXd> principal_log(const Eigen::MatrixXd& m,
                                             double chart_radius = 0.5);

/// Best-effort logarithm used as a descent direction proposal: attempts the
/// principal log for any invertible matrix without eigenvalues on the closed
/// negative real axis. No chart guarantee.
std::optional<Eigen::MatrixXd> log_proposal(const Eigen::MatrixXd& m);

}  // namespace fblup
