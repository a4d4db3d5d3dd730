#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spikelab/spectrum.hpp"

namespace spikelab {

enum class NoiseKind { Gaussian, Rademacher, ExpCentered, BernoulliT };

/// Standardized i.i.d. noise law (mean 0, variance 1) with known third and
/// fourth moments.
struct NoiseLaw {
  NoiseKind kind = NoiseKind::Gaussian;
  double t = 0.5;  // success probability, BernoulliT only

  static NoiseLaw gaussian() { return {NoiseKind::Gaussian, 0.5}; }
  static NoiseLaw rademacher() { return {NoiseKind::Rademacher, 0.5}; }
  static NoiseLaw exp_centered() { return {NoiseKind::ExpCentered, 0.5}; }
  static NoiseLaw bernoulli_t(double t);

  double v3() const;
  double v4() const;
  std::string name() const;
  static NoiseLaw from_name(const std::string& name, double t = 0.5);
};

/// Symmetric square root of the common covariance Sigma_0 = R^2.
class CovarianceRoot {
 public:
  enum class Kind { Diagonal, ToeplitzTridiagonal, Dense };

  /// Sigma_0 = diag(sigma0_diag); entries must be positive.
  static CovarianceRoot diagonal(Eigen::VectorXd sigma0_diag);
  static CovarianceRoot identity(Eigen::Index p);
  /// R is the p x p symmetric tridiagonal Toeplitz matrix with `diag` on the
  /// main diagonal and `off` on both neighbours.
  static CovarianceRoot toeplitz_tridiagonal_root(Eigen::Index p, double diag, double off);
  /// Explicit symmetric root; intended for small p.
  static CovarianceRoot dense_root(Eigen::MatrixXd root);

  Kind kind() const noexcept { return kind_; }
  Eigen::Index dim() const noexcept { return p_; }
  bool is_diagonal() const noexcept { return kind_ == Kind::Diagonal; }
  /// Diagonal of Sigma_0 (Diagonal kind only).
  const Eigen::VectorXd& sigma0_diag() const;
  double toeplitz_diag() const noexcept { return tdiag_; }
  double toeplitz_off() const noexcept { return toff_; }
  const Eigen::MatrixXd& dense() const noexcept { return dense_; }

  /// R z for a column block.
  void apply_root(Eigen::Ref<Eigen::MatrixXd> z) const;
  Eigen::MatrixXd root_times(const Eigen::MatrixXd& v) const;
  Eigen::MatrixXd sigma_times(const Eigen::MatrixXd& v) const;
  /// (Sigma_0 - shift I)^{-1} v. Throws SingularQ when the shift hits the spectrum.
  Eigen::MatrixXd solve_shifted(double shift, const Eigen::MatrixXd& v) const;

  /// Eigenvalues of Sigma_0, ascending.
  const std::vector<double>& eigenvalues() const noexcept { return eigs_; }
  DiscreteSpectrum spectrum() const { return spectrum_from_eigenvalues(eigs_); }
  double a() const;  // tr(Sigma_0) / p
  double b() const;  // tr(Sigma_0^2) / p

 private:
  Kind kind_ = Kind::Diagonal;
  Eigen::Index p_ = 0;
  Eigen::VectorXd diag_;
  double tdiag_ = 0.0;
  double toff_ = 0.0;
  Eigen::MatrixXd dense_;
  std::vector<double> eigs_;
};

/// x_ij = mu_i + Sigma_0^{1/2} z_ij for i in [1:tau].
struct PopulationModel {
  std::vector<Eigen::VectorXd> means;
  CovarianceRoot sigma0 = CovarianceRoot::identity(1);
  std::vector<double> fractions;
  NoiseLaw noise;

  int tau() const noexcept { return static_cast<int>(means.size()); }
  Eigen::Index p() const noexcept { return sigma0.dim(); }
  /// Throws InvalidArgument / DimensionMismatch on inconsistent fields.
  void validate() const;
  /// p x tau matrix whose columns are the means.
  Eigen::MatrixXd mean_matrix() const;
};

struct DataMatrix {
  Eigen::MatrixXd X;        // p x n, columns grouped by population
  std::vector<int> labels;  // 1-based population index per column
  std::vector<int> n_per_group;
};

/// Largest-remainder apportionment of n * k_i. Throws GroupTooSmall when
/// round(n k_i) < 2 for some group.
std::vector<int> group_sizes(const std::vector<double>& fractions, int n);

/// Contiguous 1-based labels for the given group sizes.
std::vector<int> contiguous_labels(const std::vector<int>& sizes);

/// Bit-reproducible sample: the noise of global column j in group g is drawn
/// from an engine keyed by (seed, replicate, g, j).
DataMatrix generate(const PopulationModel& model, int n, std::uint64_t seed,
                    std::uint64_t replicate = 0);

/// Fills a p-vector with i.i.d. draws from `law` using the keyed stream.
void draw_noise(const NoiseLaw& law, std::uint64_t key, Eigen::Ref<Eigen::VectorXd> out);
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t replicate, std::uint64_t group,
                         std::uint64_t column);

/// The tau - 1 eigenvalues of Sigma_mu = sum_{i<j} k_i k_j (mu_i - mu_j)(mu_i - mu_j)^T,
/// descending, zeros included. Uses the model fractions.
std::vector<double> sigma_mu_spikes(const PopulationModel& model);

/// Top tau - 1 eigenvalues of (Sigma_0 + Sigma_mu) / sqrt(c_n b_p) with
/// c_n = p / n and the apportioned fractions n_i / n, descending.
std::vector<double> sigma_x_spikes(const PopulationModel& model, int n);

/// Fractions n_i / n after apportionment.
std::vector<double> realized_fractions(const PopulationModel& model, int n);

namespace presets {

/// tau = 1, Sigma_0 = I, zero mean.
PopulationModel single_population(Eigen::Index p, NoiseLaw noise = NoiseLaw::gaussian());

/// Four balanced groups, Sigma_0 = diag(1 x p/2, 2 x p/2), means scaled by
/// (c_n b_p)^{1/4}; spikes 3 + eps (twice) and 2 + eps with eps = sqrt(2/(5 c_n)).
PopulationModel four_group_clt(int n, Eigen::Index p, NoiseLaw noise);

/// Three balanced groups with Sigma_0 = I, mu_2 = -20 e_1 and mu_3 = mu3_scale e_2.
PopulationModel three_group_phase(Eigen::Index p, double mu3_scale = 20.0);

/// Two groups, Sigma_0 = diag(1 x p/2, 2 x p/2), mu_1 = 0, mu_2 = w 1_p with w
/// chosen so the rank-one spike of Sigma_mu / sqrt(c_n b_p) equals alpha.
PopulationModel two_group_constant_shift(int n, Eigen::Index p, double k1, double alpha);

/// Four balanced groups, tridiagonal Toeplitz root (1, 0.5), means scaled by
/// c_n^{1/4}. `strong` selects the well separated mean configuration.
PopulationModel four_group_tridiagonal(int n, Eigen::Index p, bool strong, NoiseLaw noise);

/// Two balanced groups with Sigma_0 = I, mu_1 = c_n^{1/4} e_1, mu_2 = c_n^{1/4} e_2.
PopulationModel two_group_identity(int n, Eigen::Index p, NoiseLaw noise = NoiseLaw::gaussian());

}  // namespace presets

}  // namespace spikelab
