#include "spikelab/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spikelab/errors.hpp"
#include "spikelab/spikes.hpp"

namespace spikelab {

namespace {

// 1-based labels -> cluster sizes; tau = max label
std::vector<int> cluster_sizes(const std::vector<int>& labels, Eigen::Index n) {
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "labels length " + std::to_string(labels.size()) +
                                                  " differs from n = " + std::to_string(n));
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "no labels");
  if (*std::min_element(labels.begin(), labels.end()) < 1)
    throw Error(ErrorCode::InvalidArgument, "labels must be 1-based");
  const int tau = *std::max_element(labels.begin(), labels.end());
  std::vector<int> sizes(static_cast<std::size_t>(tau), 0);
  for (int g : labels) ++sizes[static_cast<std::size_t>(g - 1)];
  return sizes;
}

// cluster mean inner products from the raw Gram: xbar_i . xbar_j
Eigen::MatrixXd mean_products(const Eigen::MatrixXd& G, const std::vector<int>& labels,
                              const std::vector<int>& sizes) {
  const auto tau = static_cast<Eigen::Index>(sizes.size());
  const Eigen::Index n = G.rows();
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, tau);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int g = labels[static_cast<std::size_t>(j)] - 1;
    E(j, g) = 1.0 / sizes[static_cast<std::size_t>(g)];
  }
  return E.transpose() * G * E;
}

// trace of the estimated mean matrix for tau clusters
double estimated_trace(const PreparedData& d, const std::vector<int>& labels, const std::vector<int>& sizes) {
  const int tau = static_cast<int>(sizes.size());
  const double n = static_cast<double>(d.summary.n);
  const double p = static_cast<double>(d.p);
  std::vector<double> k(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) k[i] = sizes[i] / n;
  Eigen::MatrixXd M = mean_products(d.gram, labels, sizes);
  Eigen::VectorXd sk(tau);
  for (int i = 0; i < tau; ++i) sk(i) = std::sqrt(k[static_cast<std::size_t>(i)]);
  M = sk.asDiagonal() * M * sk.asDiagonal();
  const Eigen::MatrixXd N = mixing_projection(k);
  const double b = d.summary.b_hat, a = d.summary.a_hat;
  return std::sqrt(n / (p * b)) * (N * M * N).trace() - std::sqrt(p / (n * b)) * a * (tau - 1);
}

}  // namespace

PreparedData prepare(const Eigen::MatrixXd& X) {
  if (X.cols() < 3) throw Error(ErrorCode::InvalidArgument, "need n >= 3");
  PreparedData d;
  d.gram = gram(X);
  d.p = X.rows();
  d.summary = spectral_summary_centered(double_center(d.gram), d.p);
  return d;
}

int estimate_num_groups(const SpectralSummary& summary, double d_n) {
  if (!(d_n > 0.0)) throw Error(ErrorCode::InvalidArgument, "d_n must be positive");
  int count = 0;
  for (double l : summary.eigenvalues)
    if (l >= 2.0 + d_n) ++count;
  return count + 1;
}

double default_dn(double n) {
  if (n < 3.0) throw Error(ErrorCode::InvalidArgument, "default_dn needs n >= 3");
  const double l = std::log(n);
  return 1.0 / (l * l);
}

double alpha_hat(double lambda_max) {
  if (lambda_max < 2.0) throw Error(ErrorCode::BelowEdge, "largest eigenvalue below the bulk edge 2");
  return 0.5 * (lambda_max + std::sqrt(lambda_max * lambda_max - 4.0));
}

double alpha_check(const PreparedData& d, const std::vector<int>& labels) {
  const auto sizes = cluster_sizes(labels, d.summary.n);
  if (sizes.size() > 2) throw Error(ErrorCode::WrongClusterCount, "alpha_check needs exactly two clusters");
  if (sizes.size() < 2 || sizes[0] == 0 || sizes[1] == 0)
    throw Error(ErrorCode::EmptyCluster, "one of the two clusters is empty");
  return estimated_trace(d, labels, sizes);
}

double alpha_check(const Eigen::MatrixXd& X, const std::vector<int>& labels, double a_hat, double b_hat) {
  PreparedData d;
  d.gram = gram(X);
  d.p = X.rows();
  d.summary.n = static_cast<int>(X.cols());
  d.summary.a_hat = a_hat;
  d.summary.b_hat = b_hat;
  return alpha_check(d, labels);
}

ClusterScore t_statistic(const PreparedData& d, const std::vector<int>& labels) {
  ClusterScore s;
  s.alpha_check = alpha_check(d, labels);
  const double lmax = d.summary.eigenvalues.front();
  if (lmax <= 2.0) throw Error(ErrorCode::BelowEdge, "no usable spike: largest eigenvalue <= 2");
  s.alpha_hat = alpha_hat(lmax);
  s.T = s.alpha_check / s.alpha_hat;
  s.tau_used = 2;
  return s;
}

ClusterScore t_statistic(const Eigen::MatrixXd& X, const std::vector<int>& labels) {
  return t_statistic(prepare(X), labels);
}

ClusterScore t_tau(const PreparedData& d, const std::vector<int>& labels) {
  const auto sizes = cluster_sizes(labels, d.summary.n);
  const int tau = static_cast<int>(sizes.size());
  if (tau < 2) throw Error(ErrorCode::WrongClusterCount, "t_tau needs at least two clusters");
  for (int i = 0; i < tau; ++i)
    if (sizes[static_cast<std::size_t>(i)] == 0)
      throw Error(ErrorCode::EmptyCluster, "cluster " + std::to_string(i + 1) + " is empty");
  ClusterScore s;
  s.tau_used = tau;
  s.alpha_check = estimated_trace(d, labels, sizes);
  for (int k = 0; k < tau - 1; ++k) {
    const double l = d.summary.eigenvalues[static_cast<std::size_t>(k)];
    if (l > 2.0)
      s.alpha_hat += alpha_hat(l);
    else
      s.excluded.push_back(k + 1);
  }
  if (static_cast<int>(s.excluded.size()) == tau - 1)
    throw Error(ErrorCode::BelowEdge, "no usable spike: no eigenvalue above 2");
  s.T = s.alpha_check / s.alpha_hat;
  return s;
}

ClusterScore t_tau(const Eigen::MatrixXd& X, const std::vector<int>& labels) { return t_tau(prepare(X), labels); }

double t0(double acc, double rec, double k1) {
  if (acc < 0.0 || acc > 1.0 || rec < 0.0 || rec > 1.0 || !(k1 > 0.0) || k1 > 0.5)
    throw Error(ErrorCode::InvalidArgument, "t0 needs acc, rec in [0,1] and k1 in (0, 0.5]");
  const double d1 = 1.0 - k1;
  const double d2 = 1.0 - acc - k1 + 2.0 * k1 * rec;
  const double d3 = acc + k1 - 2.0 * k1 * rec;
  if (std::abs(d2) < 1e-12 || std::abs(d3) < 1e-12)
    throw Error(ErrorCode::DegenerateDenominator, "t0 denominator vanishes");
  const double num = 1.0 - acc - k1 - rec + 2.0 * k1 * rec;
  return k1 * num * num / (d1 * d2 * d3);
}

std::pair<double, double> t0_bounds(double acc, double k1) {
  if (acc < 0.0 || acc > 1.0 || !(k1 > 0.0) || k1 > 0.5)
    throw Error(ErrorCode::InvalidArgument, "t0_bounds needs acc in [0,1] and k1 in (0, 0.5]");
  double hi = k1 / (1.0 - k1) * (acc - k1) / (1.0 - (acc - k1));
  double lo = 0.0;
  if (!(k1 < 0.5 && k1 + acc <= 1.0)) lo = (k1 - acc) / k1 * (1.0 - k1 - acc) / (1.0 - k1);
  hi = std::clamp(hi, 0.0, 1.0);
  lo = std::clamp(lo, 0.0, 1.0);
  return {lo, hi};
}

LabelMetrics label_metrics(const std::vector<int>& truth, const std::vector<int>& estimate) {
  if (truth.size() != estimate.size())
    throw Error(ErrorCode::DimensionMismatch, "truth and estimate lengths differ");
  if (truth.empty()) throw Error(ErrorCode::EmptyInput, "no labels");
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth[i] < 1 || truth[i] > 2 || estimate[i] < 1 || estimate[i] > 2)
      throw Error(ErrorCode::WrongClusterCount, "label metrics need labels in {1, 2}");
  const double n = static_cast<double>(truth.size());
  const auto n1 = std::count(truth.begin(), truth.end(), 1);
  LabelMetrics m;
  int one = 1;
  if (2 * n1 > static_cast<long>(truth.size())) {
    one = 2;
    m.reoriented = true;
  }
  double agree = 0.0, hit = 0.0, called = 0.0, size1 = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t1 = truth[i] == one;
    const bool e1 = estimate[i] == one;
    agree += (t1 == e1);
    size1 += t1;
    hit += (t1 && e1);
    called += e1;
  }
  m.acc = agree / n;
  m.k1 = size1 / n;
  if (size1 == 0.0) throw Error(ErrorCode::EmptyCluster, "true cluster 1 is empty");
  m.rec = hit / size1;
  m.pre = called > 0.0 ? hit / called : 0.0;
  return m;
}

std::vector<int> construct_labels(int n1, int n2, double acc, double rec) {
  if (n1 < 1 || n2 < 1) throw Error(ErrorCode::InvalidArgument, "cluster sizes must be positive");
  const int n = n1 + n2;
  const int miss1 = static_cast<int>(std::lround((1.0 - rec) * n1));
  const int miss2 = static_cast<int>(std::lround((1.0 - acc) * n)) - miss1;
  if (miss1 < 0 || miss1 > n1 || miss2 < 0 || miss2 > n2)
    throw Error(ErrorCode::InvalidArgument, "no labeling has this ACC and REC");
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n1; ++i) out[static_cast<std::size_t>(i)] = i < miss1 ? 2 : 1;
  for (int i = 0; i < n2; ++i) out[static_cast<std::size_t>(n1 + i)] = i < miss2 ? 1 : 2;
  return out;
}

}  // namespace spikelab
