#include "fblup/subspace.hpp"

#include <algorithm>
#include <cmath>

namespace fblup {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* who) {
  if (!m.allFinite()) throw InvalidInput(std::string(who) + ": non-finite entries");
}

}  // namespace

Subspace::Subspace(int ambient_dim, Eigen::MatrixXd basis)
    : ambient_dim_(ambient_dim), basis_(std::move(basis)) {
  if (ambient_dim_ < 0) throw InvalidInput("Subspace: negative ambient dimension");
  if (basis_.size() == 0) basis_.resize(ambient_dim_, 0);
  if (basis_.rows() != ambient_dim_)
    throw DimensionMismatch("Subspace: basis rows != ambient dimension");
  if (basis_.cols() > basis_.rows())
    throw InvalidInput("Subspace: more basis vectors than ambient dimension");
  require_finite(basis_, "Subspace");
  if (basis_.cols() > 0) {
    Eigen::MatrixXd gram = basis_.transpose() * basis_;
    gram -= Eigen::MatrixXd::Identity(basis_.cols(), basis_.cols());
    if (gram.norm() > 1e-12)
      throw InvalidInput("Subspace: basis columns are not orthonormal");
  }
}

Subspace Subspace::zero(int ambient_dim) {
  return Subspace(ambient_dim, Eigen::MatrixXd(ambient_dim, 0));
}

Subspace Subspace::full(int ambient_dim) {
  return Subspace(ambient_dim, Eigen::MatrixXd::Identity(ambient_dim, ambient_dim));
}

Subspace Subspace::coordinate_span(int ambient_dim, const std::vector<int>& axes) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(ambient_dim, static_cast<int>(axes.size()));
  for (int j = 0; j < static_cast<int>(axes.size()); ++j) {
    if (axes[j] < 0 || axes[j] >= ambient_dim)
      throw InvalidInput("coordinate_span: axis out of range");
    b(axes[j], j) = 1.0;
  }
  return Subspace(ambient_dim, std::move(b));
}

Eigen::MatrixXd Subspace::projector() const {
  if (dim() == 0) return Eigen::MatrixXd::Zero(ambient_dim_, ambient_dim_);
  return basis_ * basis_.transpose();
}

Eigen::VectorXd Subspace::orthogonal_component(const Eigen::VectorXd& v) const {
  if (v.size() != ambient_dim_)
    throw DimensionMismatch("orthogonal_component: vector size mismatch");
  if (dim() == 0) return v;
  return v - basis_ * (basis_.transpose() * v);
}

Subspace orthonormalize(const Eigen::MatrixXd& raw, double tol) {
  if (tol <= 0) throw InvalidInput("orthonormalize: tol must be positive");
  require_finite(raw, "orthonormalize");
  const int d = static_cast<int>(raw.rows());
  if (raw.cols() == 0) return Subspace::zero(d);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(raw, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * smax && sv(i) > 0.0) ++rank;
  return Subspace(d, svd.matrixU().leftCols(rank));
}

namespace {

/// Rank decision on the column-equilibrated matrix: every nonzero column is
/// scaled to unit norm first, so families mixing fast-vanishing and constant
/// generators keep their exact ranks along limit sequences.
struct ColumnDecomposition {
  int rank = 0;
  Eigen::MatrixXd span_basis;    // rows x rank, orthonormal
  Eigen::MatrixXd kernel_basis;  // cols x (cols - rank), orthonormal after rescale
};

ColumnDecomposition decompose_columns(const Eigen::MatrixXd& m, double tol) {
  const int c = static_cast<int>(m.cols());
  Eigen::VectorXd scale(c);
  Eigen::MatrixXd n = m;
  for (int j = 0; j < c; ++j) {
    // Max-abs scaling: the Euclidean norm of a subnormal-range column
    // underflows, max-abs does not.
    const double nj = m.col(j).cwiseAbs().maxCoeff();
    scale[j] = nj > 0.0 ? nj : 1.0;
    n.col(j) /= scale[j];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(n, Eigen::ComputeFullV | Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double cut = smax > 0.0 ? tol * smax : tol;
  ColumnDecomposition out;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++out.rank;
  out.span_basis = svd.matrixU().leftCols(out.rank);
  // ker(m) = scale^{-1} ker(n) as spans.
  Eigen::MatrixXd kn = svd.matrixV().rightCols(c - out.rank);
  for (int j = 0; j < c; ++j) kn.row(j) /= scale[j];
  out.kernel_basis = std::move(kn);
  return out;
}

}  // namespace

Subspace kernel(const Eigen::MatrixXd& m, double tol) {
  if (tol <= 0) throw InvalidInput("kernel: tol must be positive");
  require_finite(m, "kernel");
  const int c = static_cast<int>(m.cols());
  if (c == 0) return Subspace::zero(0);
  if (m.rows() == 0) return Subspace::full(c);
  ColumnDecomposition dec = decompose_columns(m, tol);
  if (dec.rank == c) return Subspace::zero(c);
  // Rescaling may have skewed the basis badly; normalize each column before
  // re-orthonormalizing so extreme scale ratios cannot overflow the SVD.
  Eigen::MatrixXd kb = dec.kernel_basis;
  for (int j = 0; j < kb.cols(); ++j) {
    const double mx = kb.col(j).cwiseAbs().maxCoeff();
    if (mx > 0.0) kb.col(j) /= mx;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(kb, Eigen::ComputeThinU);
  return Subspace(c, svd.matrixU().leftCols(c - dec.rank));
}

Subspace column_span(const Eigen::MatrixXd& m, double tol) {
  if (tol <= 0) throw InvalidInput("column_span: tol must be positive");
  require_finite(m, "column_span");
  if (m.cols() == 0 || m.rows() == 0)
    return Subspace::zero(static_cast<int>(m.rows()));
  ColumnDecomposition dec = decompose_columns(m, tol);
  return Subspace(static_cast<int>(m.rows()), dec.span_basis);
}

double distance(const Subspace& v, const Subspace& w) {
  if (v.ambient_dim() != w.ambient_dim())
    throw DimensionMismatch("distance: ambient dimensions differ");
  return (v.projector() - w.projector()).norm();
}

bool contains(const Subspace& v, const Subspace& w, double tol) {
  if (v.ambient_dim() != w.ambient_dim())
    throw DimensionMismatch("contains: ambient dimensions differ");
  if (w.dim() == 0) return true;
  Eigen::MatrixXd residual = w.basis() - v.projector() * w.basis();
  return residual.norm() <= tol;
}

Subspace annihilator(const Subspace& v) {
  const int d = v.ambient_dim();
  if (v.dim() == 0) return Subspace::full(d);
  if (v.dim() == d) return Subspace::zero(d);
  // Full SVD of the basis: the left singular vectors past dim(v) span the
  // orthogonal complement.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v.basis(), Eigen::ComputeFullU);
  return Subspace(d, svd.matrixU().rightCols(d - v.dim()));
}

TailLimit tail_limit(const std::vector<Subspace>& seq, double conv_tol) {
  TailLimit out;
  out.length = static_cast<int>(seq.size());
  if (seq.empty()) return out;
  if (seq.size() == 1) {
    // A single observation cannot certify convergence.
    return out;
  }
  // Require the trailing window of successive distances to sit below
  // conv_tol with constant dimension.
  const int window = std::min<int>(3, static_cast<int>(seq.size()) - 1);
  const int last = static_cast<int>(seq.size()) - 1;
  for (int i = last - window; i < last; ++i) {
    if (seq[i].dim() != seq[i + 1].dim()) return out;
    if (distance(seq[i], seq[i + 1]) >= conv_tol) return out;
  }
  out.converged = true;
  out.representative = seq.back();
  return out;
}

ClusterReport limit_cluster(const std::vector<std::vector<Subspace>>& tails,
                            double conv_tol, double cluster_tol) {
  if (tails.empty()) throw InvalidInput("limit_cluster: no tails supplied");
  if (!(conv_tol < cluster_tol))
    throw InvalidInput("limit_cluster: require conv_tol < cluster_tol");
  int ambient = -1;
  for (const auto& t : tails)
    for (const auto& s : t) {
      if (ambient < 0) ambient = s.ambient_dim();
      if (s.ambient_dim() != ambient)
        throw DimensionMismatch("limit_cluster: mixed ambient dimensions");
    }
  if (ambient < 0) throw InvalidInput("limit_cluster: all tails empty");

  ClusterReport report;
  report.tail_to_cluster.assign(tails.size(), -1);
  for (std::size_t ti = 0; ti < tails.size(); ++ti) {
    TailLimit lim = tail_limit(tails[ti], conv_tol);
    if (!lim.converged) {
      ++report.non_convergent_tails;
      continue;
    }
    ++report.convergent_tails;
    const Subspace& rep = *lim.representative;
    int assigned = -1;
    for (std::size_t ci = 0; ci < report.representatives.size(); ++ci) {
      if (distance(report.representatives[ci], rep) < cluster_tol) {
        assigned = static_cast<int>(ci);
        break;
      }
    }
    if (assigned < 0) {
      report.representatives.push_back(rep);
      assigned = static_cast<int>(report.representatives.size()) - 1;
    }
    report.tail_to_cluster[ti] = assigned;
  }
  return report;
}

ClusterReport limit_cluster(const std::vector<Subspace>& seq, double conv_tol,
                            double cluster_tol) {
  return limit_cluster(std::vector<std::vector<Subspace>>{seq}, conv_tol, cluster_tol);
}

}  // namespace fblup
