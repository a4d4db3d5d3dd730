#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "spikelab/covariance.hpp"

namespace spikelab {

/// Everything the scores need from X: the raw Gram X^T X and the spectral summary.
struct PreparedData {
  Eigen::MatrixXd gram;
  Eigen::Index p = 0;
  SpectralSummary summary;
};

PreparedData prepare(const Eigen::MatrixXd& X);

/// max{i : lambda_i >= 2 + d_n} + 1, and 1 when nothing clears the threshold.
int estimate_num_groups(const SpectralSummary& summary, double d_n);

/// 1 / (log n)^2.
double default_dn(double n);

/// (lambda + sqrt(lambda^2 - 4)) / 2. BelowEdge for lambda < 2.
double alpha_hat(double lambda_max);

/// Labels are 1-based. Exactly two clusters: WrongClusterCount for more,
/// EmptyCluster when one is unused.
double alpha_check(const Eigen::MatrixXd& X, const std::vector<int>& labels, double a_hat, double b_hat);
double alpha_check(const PreparedData& d, const std::vector<int>& labels);

struct ClusterScore {
  double T = 0.0;
  double alpha_hat = 0.0;    // sum over the spikes used when tau > 2
  double alpha_check = 0.0;  // trace of the estimated mean matrix when tau > 2
  int tau_used = 2;
  std::vector<int> excluded;  // spike indices (1-based) left out of the denominator
  std::optional<double> t0;
  std::optional<std::pair<double, double>> t0_bounds;
};

ClusterScore t_statistic(const Eigen::MatrixXd& X, const std::vector<int>& labels);
ClusterScore t_statistic(const PreparedData& d, const std::vector<int>& labels);

/// tau = max label. Spikes with lambda_k <= 2 are dropped from the denominator
/// and listed in `excluded`; BelowEdge if none survive.
ClusterScore t_tau(const Eigen::MatrixXd& X, const std::vector<int>& labels);
ClusterScore t_tau(const PreparedData& d, const std::vector<int>& labels);

/// DegenerateDenominator when a factor vanishes; InvalidArgument outside the domain.
double t0(double acc, double rec, double k1);

/// (min, max) of t0 over REC for fixed ACC, clamped to [0, 1].
std::pair<double, double> t0_bounds(double acc, double k1);

struct LabelMetrics {
  double acc = 0.0;
  double rec = 0.0;
  double pre = 0.0;
  double k1 = 0.0;
  bool reoriented = false;  // true cluster 1 was the larger one, roles swapped
};

/// Two-cluster labels in {1, 2}. Cluster 1 is made the smaller true cluster.
LabelMetrics label_metrics(const std::vector<int>& truth, const std::vector<int>& estimate);

/// Truth is n1 ones followed by n2 twos. Returns an estimate with the requested
/// ACC and REC (rounded to whole samples); mistakes sit at the front of each block.
std::vector<int> construct_labels(int n1, int n2, double acc, double rec);

}  // namespace spikelab
