#include <doctest.h>

#include <cmath>
#include <random>

#include "spikelab/errors.hpp"
#include "spikelab/spikes.hpp"

using namespace spikelab;

namespace {

const double kBernT = (std::sqrt(3.0) + 3.0) / 6.0;

// two balanced groups, Sigma_0 = I, mu_1 = 0, mu_2 = w e_1 with the spike of
// Sigma_mu / sqrt(c_n) equal to `target`
PopulationModel two_group_spike(int n, Eigen::Index p, double target) {
  PopulationModel m;
  m.sigma0 = CovarianceRoot::identity(p);
  const double w = std::sqrt(target * std::sqrt(static_cast<double>(p) / n) / 0.25);
  m.means = {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p)};
  m.means[1](0) = w;
  m.fractions = {0.5, 0.5};
  return m;
}

ProjectionData random_projection(int tau, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ProjectionData pd;
  pd.tau = tau;
  pd.k.assign(static_cast<std::size_t>(tau), 1.0 / tau);
  Eigen::MatrixXd y(12, tau);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = 0.3 * nd(rng);
  pd.theta = y.transpose() * y;
  const auto t = static_cast<std::size_t>(tau);
  pd.rho_.assign(t * t * t * t, 0.0);
  for (int i = 0; i < tau; ++i)
    for (int j = 0; j < tau; ++j)
      for (int l = 0; l < tau; ++l)
        for (int s = 0; s < tau; ++s)
          pd.rho_[((i * t + j) * t + l) * t + s] =
              (y.col(i).array() * y.col(j).array() * y.col(l).array() * y.col(s).array()).sum();
  return pd;
}

}  // namespace

TEST_CASE("classify_spikes worked values") {
  RegimeParams inf;
  auto h = DiscreteSpectrum::identity();
  auto rep = classify_spikes({3.0, 0.9}, {1, 1}, h, inf);
  CHECK(rep.clusters[0].kind == SpikeKind::Distant);
  CHECK(rep.clusters[0].lambda_limit == doctest::Approx(3.0 + 1.0 / 3.0).epsilon(1e-12));
  CHECK(rep.clusters[1].kind == SpikeKind::Close);
  CHECK(rep.clusters[1].lambda_limit == doctest::Approx(2.0).epsilon(1e-12));

  RegimeParams c4{4.0, 1.0, 1.0};
  auto r4 = classify_spikes({2.0}, {1}, h, c4);
  CHECK(r4.edges.a_frak == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(r4.clusters[0].kind == SpikeKind::Distant);
  CHECK(r4.clusters[0].lambda_limit == doctest::Approx(2.0 + 1.0 / 1.5).epsilon(1e-12));

  // exactly at the critical point counts as close
  auto at = classify_spikes({1.0}, {1}, h, inf);
  CHECK(at.clusters[0].kind == SpikeKind::Close);
  // pole at 1/sqrt(c) = 0.5 is where a zero-separation spike lands: Close, and phi itself refuses it
  auto pole = classify_spikes({0.5}, {1}, h, c4);
  CHECK(pole.clusters[0].kind == SpikeKind::Close);
  CHECK(pole.clusters[0].lambda_limit == doctest::Approx(r4.edges.b_frak));
  CHECK_THROWS_AS(phi(h, c4, 0.5), Error);
  auto none = classify_spikes({0.0}, {1}, h, inf);
  CHECK(none.clusters[0].kind == SpikeKind::Close);
  CHECK_THROWS_AS(classify_spikes({1.0, 2.0}, {1, 1}, h, inf), Error);
}

TEST_CASE("invert_spike worked values and round trips") {
  RegimeParams inf;
  auto h = DiscreteSpectrum::identity();
  CHECK(invert_spike(2.5, h, inf) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(invert_spike(2.9, h, inf) == doctest::Approx(2.5).epsilon(1e-14));
  try {
    invert_spike(2.0, h, inf);
    FAIL("expected BelowEdge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BelowEdge);
  }
  RegimeParams c4{4.0, 1.0, 1.0};
  for (double a : {1.2, 2.0, 5.0}) {
    CHECK(invert_spike(phi(h, inf, a), h, inf) == doctest::Approx(a).epsilon(1e-10));
    if (a > 1.5) CHECK(invert_spike(phi(h, c4, a), h, c4) == doctest::Approx(a).epsilon(1e-10));
  }
}

TEST_CASE("mixing projection properties") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int tau = 1; tau <= 6; ++tau) {
    std::vector<double> k(static_cast<std::size_t>(tau));
    double s = 0.0;
    for (auto& x : k) s += (x = u(rng));
    for (auto& x : k) x /= s;
    Eigen::MatrixXd N = mixing_projection(k);
    CHECK((N * N - N).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::VectorXd sk(tau);
    for (int i = 0; i < tau; ++i) sk(i) = std::sqrt(k[static_cast<std::size_t>(i)]);
    CHECK((N * sk).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N);
    CHECK(std::abs(es.eigenvalues()(0)) < 1e-12);
    for (int i = 1; i < tau; ++i) CHECK(es.eigenvalues()(i) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("projection data closed forms") {
  // Sigma_0 = I: theta_ij = sqrt(k_i k_j) mu_i.mu_j (sqrt(c_n) alpha - 1)^{-2}
  const int n = 40;
  const Eigen::Index p = 1000;
  auto m = presets::two_group_identity(n, p);
  m.means[1](0) = 0.6;
  const double alpha = 2.5;
  auto pd = projection_data(m, n, alpha);
  const double cn = static_cast<double>(p) / n;
  const double den = std::sqrt(cn) * alpha - 1.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(pd.theta(i, j) == doctest::Approx(0.5 * m.means[i].dot(m.means[j]) / (den * den)).epsilon(1e-12));
  Eigen::MatrixXd U = m.mean_matrix() * std::sqrt(0.5);
  CHECK((pd.V - U.transpose() * U / (1.0 - std::sqrt(cn) * alpha)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((pd.Vprime - std::sqrt(cn) * U.transpose() * U / (den * den)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((pd.theta - pd.theta.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  // permutation symmetry of rho and h
  CHECK(pd.rho(0, 1, 1, 0) == doctest::Approx(pd.rho(1, 0, 0, 1)));
  CHECK(pd.rho(0, 0, 0, 1) == doctest::Approx(pd.rho(1, 0, 0, 0)));
  CHECK(pd.h(0, 1, 1) == doctest::Approx(pd.h(1, 1, 0)));

  // large c: V and V' approach the c = infinity forms
  auto big = presets::two_group_identity(20, 2'000'000);
  auto pu = projection_data(big, 20, 3.0);
  auto pi = projection_data(big, 20, 3.0, RegimeMode::Ultrahigh);
  CHECK((pu.V - pi.V).cwiseAbs().maxCoeff() < 2e-3 * pi.V.cwiseAbs().maxCoeff());
  CHECK((pu.Vprime - pi.Vprime).cwiseAbs().maxCoeff() < 5e-3 * pi.Vprime.cwiseAbs().maxCoeff());
  CHECK(pu.theta.cwiseAbs().maxCoeff() < 1e-2);

  // zero means: all tables vanish
  auto zero = presets::two_group_identity(n, p);
  zero.means[0].setZero();
  zero.means[1].setZero();
  auto pz = projection_data(zero, n, alpha);
  CHECK(pz.V.cwiseAbs().maxCoeff() == 0.0);
  CHECK(pz.theta.cwiseAbs().maxCoeff() == 0.0);
  for (double r : pz.rho_) CHECK(r == 0.0);

  // singular Q
  try {
    projection_data(m, n, 1.0 / std::sqrt(cn));
    FAIL("expected SingularQ");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularQ);
  }
}

TEST_CASE("W covariance case by case") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ProjectionData pd = random_projection(4, seed);
    const double fp = 0.7, v4 = 6.5;
    WCovariance w = w_covariance(pd, fp, v4);
    const auto& th = pd.theta;
    auto rho = [&](int a, int b, int c, int d) { return pd.rho(a, b, c, d); };
    const double g = fp * (v4 - 3.0);
    const int i = 0, j = 1, l = 2, t = 3;
    CHECK(w(i, i, i, i) == doctest::Approx(2 * (2 * th(i, i) + th(i, i) * th(i, i) + 1 - fp) + g * rho(i, i, i, i)));
    CHECK(w(i, j, i, j) == doctest::Approx(th(i, i) + th(j, j) + th(i, j) * th(i, j) + th(j, j) * th(i, i) + 1 - fp +
                                           g * rho(i, j, i, j)));
    CHECK(w(i, i, i, t) == doctest::Approx(2 * (th(i, t) + th(i, t) * th(i, i)) + g * rho(i, i, i, t)));
    CHECK(w(i, i, l, l) == doctest::Approx(2 * th(i, l) * th(i, l) + g * rho(i, i, l, l)));
    CHECK(w(i, i, l, t) == doctest::Approx(2 * th(t, i) * th(i, l) + g * rho(i, i, l, t)));
    CHECK(w(i, j, l, j) == doctest::Approx(th(i, l) + th(j, l) * th(j, i) + th(j, j) * th(i, l) + g * rho(i, j, l, j)));
    CHECK(w(i, j, l, t) == doctest::Approx(th(j, l) * th(t, i) + th(j, t) * th(l, i) + g * rho(i, j, l, t)));

    // positive semidefinite over the free entries (phi' <= 1)
    Eigen::MatrixXd c = w.matrix();
    c.diagonal().array() += 1e-12;
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    CHECK(llt.info() == Eigen::Success);
  }
  // c = infinity reduction
  ProjectionData zero;
  zero.tau = 3;
  zero.theta = Eigen::MatrixXd::Zero(3, 3);
  zero.rho_.assign(81, 0.0);
  const double alpha = 2.0;
  WCovariance w = w_covariance(zero, 1.0 - 1.0 / (alpha * alpha), 3.0);
  CHECK(w(0, 0, 0, 0) == doctest::Approx(0.5));
  CHECK(w(0, 1, 0, 1) == doctest::Approx(0.25));
  CHECK(w(0, 0, 1, 1) == 0.0);
  CHECK(w(0, 1, 1, 2) == 0.0);
  CHECK(w(0, 0, 0, 1) == 0.0);
  WCovariance w2 = w_covariance(zero, 0.3, 3.0);
  CHECK(w2(1, 1, 1, 1) == doctest::Approx(2.0 * (1.0 - 0.3)));
}

TEST_CASE("cluster variances for the four-group model") {
  struct Row {
    int n;
    Eigen::Index p;
    bool case_one;
    double sum12, d3;
  };
  // c = 0.5, 10, 500; Case I (centred exponential) and Case II (Bernoulli, v4 = 3)
  const Row rows[] = {{400, 200, true, 31.5876, 4.6717},  {400, 200, false, 25.4846, 4.2526},
                      {400, 4000, true, 8.6294, 2.9699},  {400, 4000, false, 8.2612, 2.8512},
                      {8, 4000, true, 4.2157, 1.6951},    {8, 4000, false, 4.2081, 1.6924}};
  for (const auto& row : rows) {
    CAPTURE(row.p);
    CAPTURE(row.case_one);
    NoiseLaw law = row.case_one ? NoiseLaw::exp_centered() : NoiseLaw::bernoulli_t(kBernT);
    auto m = presets::four_group_clt(row.n, row.p, law);
    auto a = sigma_x_spikes(m, row.n);
    auto r = proxy_regime(m, row.n);
    auto h = m.sigma0.spectrum();
    auto pd1 = projection_data(m, row.n, a[0]);
    auto pd2 = projection_data(m, row.n, a[2]);
    const double v1 = cluster_trace_variance(pd1, {a[0], 2, phi_prime(h, r, a[0])}, law.v4());
    const double v2 = cluster_trace_variance(pd2, {a[2], 1, phi_prime(h, r, a[2])}, law.v4());
    CHECK(v1 == doctest::Approx(row.sum12).epsilon(5e-5));
    CHECK(v2 == doctest::Approx(row.d3).epsilon(5e-5));
    // exact -1 eigenvalue of N V N at the proxy alpha
    auto g = cluster_geometry(pd1, 2);
    for (double e : g.nvn_eigs) CHECK(e == doctest::Approx(-1.0).epsilon(1e-10));
  }
  // lambda_n1 closed form at c_n = 500
  auto m = presets::four_group_clt(8, 4000, NoiseLaw::gaussian());
  const double eps = std::sqrt(2.0 / 2500.0);
  const double lam = phi(m.sigma0.spectrum(), proxy_regime(m, 8), 3.0 + eps);
  CHECK(lam == doctest::Approx(46.0 / 15.0 + eps + 0.8 / (3.0 - eps)).epsilon(1e-12));
  CHECK(lam == doctest::Approx(3.36419).epsilon(1e-4));
}

TEST_CASE("two-sample variance closed forms") {
  CHECK(two_sample_variance(0.0, 0.0, 3.0, 1.0 - 1.0 / 9.0, 3.0) == doctest::Approx(16.0 / 9.0).epsilon(1e-14));
  CHECK(two_sample_variance(0.0, 0.0, 1e3, 1.0 - 1e-6, 3.0) == doctest::Approx(2.0).epsilon(1e-6));

  // Sigma_0 = I, tau = 2 at c = 10, alpha = 3, against the simplified display
  for (double v4 : {3.0, 1.0, 9.0}) {
    const int n = 40;
    const Eigen::Index p = 400;
    const double c = 10.0, alpha = 3.0;
    auto m = two_group_spike(n, p, alpha - 1.0 / std::sqrt(c));  // alpha_n = 1/sqrt(c) + spike
    m.noise = v4 == 3.0 ? NoiseLaw::gaussian() : (v4 == 1.0 ? NoiseLaw::rademacher() : NoiseLaw::exp_centered());
    auto ax = sigma_x_spikes(m, n);
    REQUIRE(ax[0] == doctest::Approx(alpha).epsilon(1e-12));
    auto pd = projection_data(m, n, alpha);
    auto oe = two_sample_omega_eta(pd);
    RegimeParams r = proxy_regime(m, n);
    const double fp = phi_prime(DiscreteSpectrum::identity(), r, alpha);
    CHECK(fp == doctest::Approx(1.0 - c / ((std::sqrt(c) * alpha - 1.0) * (std::sqrt(c) * alpha - 1.0))));
    const double u = alpha - 1.0 / std::sqrt(c);
    const double d4 = std::pow(m.means[1](0), 4);
    const double eta_display = 0.0625 * d4 / std::pow(std::sqrt(c) * alpha - 1.0, 4);
    CHECK(oe.eta == doctest::Approx(eta_display).epsilon(1e-12));
    const double want = 2.0 * (1.0 + 2.0 * alpha / std::sqrt(c) - 1.0 / c) * (1.0 - 1.0 / (u * u)) +
                        (v4 - 3.0) * (u - 1.0 / u) * (u - 1.0 / u) * eta_display;
    const double got = two_sample_variance(oe.omega, oe.eta, alpha, fp, v4);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    // the general cluster formula agrees with the two-sample closed form
    CHECK(cluster_trace_variance(pd, {alpha, 1, fp}, v4) == doctest::Approx(got).epsilon(1e-10));
  }
}

TEST_CASE("cluster limit sampler") {
  // tau = 2, c = infinity, alpha = 3: N(0, 16/9)
  auto m = two_group_spike(20, 20000, 3.0);
  auto pd = projection_data(m, 20, 3.0, RegimeMode::Ultrahigh);
  ClusterSpec spec{3.0, 1, 1.0 - 1.0 / 9.0};
  Eigen::MatrixXd draws = cluster_limit_sampler(pd, spec, 3.0, 42, 100000);
  const double mean = draws.col(0).mean();
  const double var = (draws.col(0).array() - mean).square().sum() / (draws.rows() - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(16.0 / 9.0).epsilon(0.03));
  CHECK(cluster_trace_variance(pd, spec, 3.0) == doctest::Approx(16.0 / 9.0).epsilon(1e-12));
  // deterministic under a fixed seed
  Eigen::MatrixXd again = cluster_limit_sampler(pd, spec, 3.0, 42, 100);
  CHECK((again - draws.topRows(100)).cwiseAbs().maxCoeff() == 0.0);

  try {
    cluster_limit_sampler(pd, {3.0, 2, spec.phi_prime}, 3.0, 1, 10);
    FAIL("expected ClusterMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ClusterMismatch);
  }
  auto off = projection_data(m, 20, 4.0, RegimeMode::Ultrahigh);
  CHECK_THROWS_AS(cluster_limit_sampler(off, spec, 3.0, 1, 10), Error);

  // exchangeable pair: both ordered eigenvalues of the m = 2 cluster mirror each other
  auto four = presets::four_group_clt(8, 4000, NoiseLaw::gaussian());
  auto a = sigma_x_spikes(four, 8);
  auto pd4 = projection_data(four, 8, a[0]);
  const double fp = phi_prime(four.sigma0.spectrum(), proxy_regime(four, 8), a[0]);
  Eigen::MatrixXd pair = cluster_limit_sampler(pd4, {a[0], 2, fp}, 3.0, 9, 40000);
  CHECK(pair.cols() == 2);
  // sum variance agrees with the trace formula
  Eigen::ArrayXd s = pair.col(0) + pair.col(1);
  const double sv = (s - s.mean()).square().sum() / (s.size() - 1);
  CHECK(sv == doctest::Approx(cluster_trace_variance(pd4, {a[0], 2, fp}, 3.0)).epsilon(0.04));
}
