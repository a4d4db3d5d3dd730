#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "spikelab/datagen.hpp"
#include "spikelab/spectrum.hpp"

namespace spikelab {

using cplx = std::complex<double>;

/// Phi = I_n - 1 1^T / n.
Eigen::MatrixXd centering_projection(int n);

/// X^T X (n x n), lower triangle accumulated with a rank update and mirrored.
Eigen::MatrixXd gram(const Eigen::MatrixXd& X);

/// Phi G Phi for a symmetric n x n G.
Eigen::MatrixXd double_center(const Eigen::MatrixXd& G);

struct ABEstimate {
  double a_hat = 0.0;
  double b_hat = 0.0;
};

/// a_hat = tr(S)/p, b_hat = tr(S^2)/p - (tr S)^2 / ((n-1) p) with
/// S = Phi X^T X Phi / (n-1). Throws NonPositiveBhat when b_hat <= 0.
ABEstimate estimate_ab(const Eigen::MatrixXd& X);
/// Same from a doubly centred Gram Phi X^T X Phi.
ABEstimate estimate_ab_centered(const Eigen::MatrixXd& centered_gram, Eigen::Index p);

/// sqrt(p/(n b)) [Phi X^T X Phi / p - a Phi].
Eigen::MatrixXd renormalized_gram(const Eigen::MatrixXd& X, double a, double b);
Eigen::MatrixXd renormalized_from_centered(const Eigen::MatrixXd& centered_gram, Eigen::Index p,
                                           double a, double b);

/// Eigenvalues of a symmetric matrix, descending.
std::vector<double> descending_eigenvalues(const Eigen::MatrixXd& m);

struct SpectralSummary {
  std::vector<double> eigenvalues;  // descending, n values, includes the structural zero
  double a_hat = 0.0;
  double b_hat = 0.0;
  int n = 0;
  Eigen::Index p = 0;
  double c_n = 0.0;
};

SpectralSummary spectral_summary(const Eigen::MatrixXd& X);
SpectralSummary spectral_summary_centered(const Eigen::MatrixXd& centered_gram, Eigen::Index p);

/// Resolvent of the group-wise centred covariance B_n = Y Y^T with
/// Y = X Psi / sqrt(n), applied through the n x n side.
class GroupCenteredResolvent {
 public:
  /// labels are 1-based group indices; every group needs two members.
  GroupCenteredResolvent(const Eigen::MatrixXd& X, const std::vector<int>& labels);

  int groups() const noexcept { return tau_; }
  const std::vector<int>& sizes() const noexcept { return sizes_; }
  /// Group sample means, p x tau.
  const Eigen::MatrixXd& group_means() const noexcept { return means_; }
  /// Y (p x n).
  const Eigen::MatrixXd& factor() const noexcept { return Y_; }

  /// (B_n - zt I)^{-1} V.
  Eigen::MatrixXcd apply(cplx zt, const Eigen::MatrixXcd& V) const;
  /// P^T (B_n - zt I)^{-1} P (symmetric, not Hermitian).
  Eigen::MatrixXcd bilinear(cplx zt, const Eigen::MatrixXd& P) const;

 private:
  int tau_ = 0;
  std::vector<int> sizes_;
  Eigen::MatrixXd means_;
  Eigen::MatrixXd Y_;
  Eigen::VectorXd gram_eigs_;  // eigenvalues of Y^T Y
  Eigen::MatrixXd gram_vecs_;
};

/// Columns Sigma_0^{1/2} Q(alpha)^{-1} mu_i with Q(alpha) = Sigma_0 - scale * alpha * I.
/// Complex alpha is supported for diagonal Sigma_0 only.
Eigen::MatrixXcd shifted_mean_projection(const PopulationModel& model, cplx alpha, double scale);

/// theta_ij, h_ijl and rho_ijlt built from projected columns y_i:
/// theta = sqrt(k_i k_j) y_i . y_j, h and rho likewise with coordinate-wise
/// triple and quadruple products (bilinear, no conjugation).
struct MomentTensors {
  int tau = 0;
  Eigen::MatrixXcd theta;
  std::vector<cplx> h_;    // tau^3
  std::vector<cplx> rho_;  // tau^4

  cplx h(int i, int j, int l) const { return h_[static_cast<std::size_t>((i * tau + j) * tau + l)]; }
  cplx rho(int i, int j, int l, int t) const {
    return rho_[static_cast<std::size_t>(((i * tau + j) * tau + l) * tau + t)];
  }
};
MomentTensors moment_tensors(const Eigen::MatrixXcd& Y, const std::vector<double>& k);

enum class RegimeMode {
  Unified,    // finite-n proxies (c_n, H_p, b_p)
  Ultrahigh,  // c = infinity limits
};

/// Finite-n proxy regime (c_n = p/n, moments of Sigma_0).
RegimeParams proxy_regime(const PopulationModel& model, int n);

struct SesquilinearPanel {
  cplx z;
  cplx z_tilde;
  Eigen::MatrixXcd forms;      // 2 tau x 2 tau, (M_sbar, M_mu)^T R (M_sbar, M_mu) * z~ / sqrt(c_n b_p)
  Eigen::MatrixXcd limit;      // c = infinity first-order limits
  Eigen::MatrixXcd centering;  // same structure built from the finite proxy s_0(z)
  /// sqrt(n) (forms - centering).
  Eigen::MatrixXcd scaled(int n) const;
};

/// s_bar_i = xbar_i - mu_i with mu_i from the model. Real z must satisfy
/// |z| > b_frak + 0.05 (PoleViolation otherwise).
SesquilinearPanel sesquilinear_panel(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                                     const PopulationModel& model, cplx z);
SesquilinearPanel sesquilinear_panel(const GroupCenteredResolvent& res, const PopulationModel& model,
                                     cplx z);

/// Covariance of the Gaussian limit L of the scaled panel, over entries
/// (i, j), (l, t) in [0, 2 tau).
struct LCovariance {
  int tau = 0;
  cplx s;
  cplx s_prime;
  double v3 = 0.0;
  double v4 = 3.0;
  std::vector<double> k;
  MomentTensors moments;  // at alpha = -1/s (zeros in the ultrahigh regime)

  cplx operator()(int i, int j, int l, int t) const;
  /// Full matrix over the canonical pairs (i <= j), row-major pair order.
  Eigen::MatrixXcd matrix() const;
};

LCovariance L_covariance(const PopulationModel& model, int n, cplx z, RegimeMode mode);

}  // namespace spikelab
