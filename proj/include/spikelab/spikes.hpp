#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spikelab/covariance.hpp"
#include "spikelab/datagen.hpp"
#include "spikelab/spectrum.hpp"

namespace spikelab {

enum class SpikeKind { Distant, Close };

struct SpikeCluster {
  double alpha = 0.0;
  int multiplicity = 1;
  SpikeKind kind = SpikeKind::Close;
  double lambda_limit = 0.0;  // phi(alpha) when distant, b_frak otherwise
  double phi_prime = 0.0;     // phi'(alpha) when distant, 0 otherwise
};

struct SpikeReport {
  std::vector<SpikeCluster> clusters;
  SupportEdges edges{};
};

/// alphas descending, one entry per cluster. alpha == a_frak counts as Close.
SpikeReport classify_spikes(const std::vector<double>& alphas, const std::vector<int>& multiplicities,
                            const DiscreteSpectrum& h, const RegimeParams& r);

/// Unique alpha > a_frak with phi(alpha) = lambda. Throws BelowEdge for lambda <= b_frak.
double invert_spike(double lambda, const DiscreteSpectrum& h, const RegimeParams& r);

/// Group the distinct values of a descending list (relative gap tol) into clusters.
void cluster_values(const std::vector<double>& values, double rel_tol, std::vector<double>& alphas,
                    std::vector<int>& multiplicities);

/// Finite-n quantities at a given alpha: Q(alpha) = Sigma_0 - scale * alpha I,
/// scale = sqrt(c_n b_p).
struct ProjectionData {
  int tau = 0;
  double alpha = 0.0;
  double scale = 0.0;
  std::vector<double> k;
  Eigen::MatrixXd N;       // I - sqrt k sqrt k^T
  Eigen::MatrixXd UtU;     // U^T U with U = (sqrt k_i mu_i)
  Eigen::MatrixXd V;       // U^T Q^{-1} U
  Eigen::MatrixXd Vprime;  // scale * U^T Q^{-2} U
  Eigen::MatrixXd theta;
  std::vector<double> h_;
  std::vector<double> rho_;

  double h(int i, int j, int l) const { return h_[static_cast<std::size_t>((i * tau + j) * tau + l)]; }
  double rho(int i, int j, int l, int t) const {
    return rho_[static_cast<std::size_t>(((i * tau + j) * tau + l) * tau + t)];
  }
};

/// N_n from group fractions.
Eigen::MatrixXd mixing_projection(const std::vector<double>& k);

/// Unified: finite proxies. Ultrahigh: V = -U^T U / (scale alpha),
/// V' = U^T U / (scale alpha^2), theta = rho = h = 0.
ProjectionData projection_data(const PopulationModel& model, int n, double alpha,
                               RegimeMode mode = RegimeMode::Unified);

/// Covariance of the symmetric Gaussian matrix W.
struct WCovariance {
  int tau = 0;
  double phi_prime = 0.0;
  double v4 = 3.0;
  Eigen::MatrixXd theta;
  std::vector<double> rho_;

  double operator()(int i, int j, int l, int t) const;
  /// Over the free entries (i <= j) in row-major pair order.
  Eigen::MatrixXd matrix() const;
};

WCovariance w_covariance(const ProjectionData& pd, double phi_prime, double v4);

struct ClusterSpec {
  double alpha = 0.0;
  int multiplicity = 1;
  double phi_prime = 0.0;
};

/// Q_k, G and the linear map sending W to the limit matrix of a cluster.
struct ClusterGeometry {
  Eigen::MatrixXd Qk;  // tau x m
  Eigen::MatrixXd G;   // m x m
  std::vector<double> nvn_eigs;  // eigenvalues of N V N matched to -1
};

/// Throws ClusterMismatch when N V N does not have -1 (within 0.05) with the
/// requested multiplicity or when Q^T N V' N Q is singular.
ClusterGeometry cluster_geometry(const ProjectionData& pd, int multiplicity);

/// draws x m matrix; each row holds the ascending eigenvalues of
/// -sqrt(phi') Q^T N W N Q G for one draw of W.
Eigen::MatrixXd cluster_limit_sampler(const ProjectionData& pd, const ClusterSpec& spec, double v4,
                                      std::uint64_t seed, int draws);

/// Variance of the sum of the cluster's limiting eigenvalues
/// (the trace of the limit matrix).
double cluster_trace_variance(const ProjectionData& pd, const ClusterSpec& spec, double v4);

struct OmegaEta {
  double omega = 0.0;
  double eta = 0.0;
};
/// tau = 2 only.
OmegaEta two_sample_omega_eta(const ProjectionData& pd);

/// 2 phi' alpha^2 [1 - phi'/(1+omega)^2 + phi'(v4-3) eta / (2 (1+omega)^2)].
double two_sample_variance(double omega, double eta, double alpha1, double phi_prime1, double v4);

}  // namespace spikelab
