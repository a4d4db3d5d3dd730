#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "spikelab/covariance.hpp"
#include "spikelab/errors.hpp"

using namespace spikelab;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Psi: group-centering projector on the sample side
Eigen::MatrixXd group_projector(const std::vector<int>& labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(n, n);
  std::vector<int> cnt(*std::max_element(labels.begin(), labels.end()) + 1, 0);
  for (int g : labels) ++cnt[g];
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (labels[i] == labels[j]) psi(i, j) -= 1.0 / cnt[labels[i]];
  return psi;
}

}  // namespace

TEST_CASE("centering projection identities") {
  Eigen::MatrixXd two = centering_projection(2);
  CHECK(two(0, 0) == 0.5);
  CHECK(two(0, 1) == -0.5);
  for (int n : {2, 3, 7, 50, 201}) {
    Eigen::MatrixXd phi = centering_projection(n);
    CHECK((phi * phi - phi).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((phi - phi.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((phi * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(phi.trace() == doctest::Approx(n - 1).epsilon(1e-14));
  }
  CHECK_THROWS_AS(centering_projection(1), Error);
}

TEST_CASE("Gram-side constructions agree with naive p x p ones") {
  for (auto [p, n] : {std::pair<int, int>{60, 10}, {40, 10}, {7, 20}, {30, 12}}) {
    Eigen::MatrixXd X = random_matrix(p, n, static_cast<std::uint64_t>(p * 100 + n));
    X.row(0).array() += 3.0;
    Eigen::MatrixXd phi = centering_projection(n);
    Eigen::MatrixXd gc = phi * X.transpose() * X * phi;
    CHECK((double_center(gram(X)) - gc).cwiseAbs().maxCoeff() < 1e-10);

    // a_hat, b_hat from the p x p unbiased covariance
    Eigen::MatrixXd sp = X * phi * X.transpose() / (n - 1);
    const double a_want = sp.trace() / p;
    const double b_want = (sp * sp).trace() / p - sp.trace() * sp.trace() / ((n - 1.0) * p);
    auto ab = estimate_ab(X);
    CHECK(ab.a_hat == doctest::Approx(a_want).epsilon(1e-10));
    CHECK(ab.b_hat == doctest::Approx(b_want).epsilon(1e-10));

    Eigen::MatrixXd A = renormalized_gram(X, 1.3, 2.1);
    Eigen::MatrixXd naive = std::sqrt(p / (n * 2.1)) * (gc / p - 1.3 * phi);
    CHECK((A - naive).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((A * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("A_n eigenvalues map from S_n eigenvalues") {
  const int p = 40, n = 10;
  const double a = 1.2, b = 1.9;
  Eigen::MatrixXd X = random_matrix(p, n, 99);
  Eigen::MatrixXd phi = centering_projection(n);
  Eigen::MatrixXd sn = X * phi * X.transpose() / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sn);
  // the top n-1 eigenvalues of S_n are the nonzero ones
  std::vector<double> want{0.0};
  for (int i = 0; i < n - 1; ++i)
    want.push_back(std::sqrt(n / (p * b)) * es.eigenvalues()(p - 1 - i) - std::sqrt(p / (n * b)) * a);
  std::sort(want.begin(), want.end(), std::greater<>());
  auto got = descending_eigenvalues(renormalized_gram(X, a, b));
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-8).scale(1.0));
}

TEST_CASE("estimate_ab degenerate input and Monte Carlo targets") {
  try {
    estimate_ab(Eigen::MatrixXd::Zero(5, 6));
    FAIL("expected NonPositiveBhat");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveBhat);
  }
  std::vector<double> as, bs;
  auto m = presets::single_population(10000);
  for (int seed = 0; seed < 50; ++seed) {
    auto d = generate(m, 100, static_cast<std::uint64_t>(seed));
    auto ab = estimate_ab(d.X);
    as.push_back(ab.a_hat);
    bs.push_back(ab.b_hat);
  }
  CHECK(median(as) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(median(bs) == doctest::Approx(1.0).epsilon(0.05));

  // two-level covariance: a_p = 1.5, b_p = 2.5
  as.clear();
  bs.clear();
  PopulationModel two = presets::four_group_clt(200, 20000, NoiseLaw::gaussian());
  two.means.assign(1, Eigen::VectorXd::Zero(20000));
  two.fractions = {1.0};
  for (int seed = 0; seed < 50; ++seed) {
    auto ab = estimate_ab(generate(two, 200, static_cast<std::uint64_t>(seed)).X);
    as.push_back(ab.a_hat);
    bs.push_back(ab.b_hat);
  }
  CHECK(median(as) == doctest::Approx(1.5).epsilon(0.02));
  CHECK(median(bs) == doctest::Approx(2.5).epsilon(0.05));
}

TEST_CASE("spectral summary shape and bulk edge") {
  auto tiny = spectral_summary(random_matrix(3, 5, 4));
  REQUIRE(tiny.eigenvalues.size() == 5);
  CHECK(std::is_sorted(tiny.eigenvalues.rbegin(), tiny.eigenvalues.rend()));
  CHECK(std::any_of(tiny.eigenvalues.begin(), tiny.eigenvalues.end(), [](double v) { return std::abs(v) < 1e-8; }));

  auto bulk = spectral_summary(generate(presets::single_population(40000), 200, 1).X);
  CHECK(bulk.eigenvalues.front() > 1.8);
  CHECK(bulk.eigenvalues.front() < 2.4);
  CHECK(bulk.c_n == 200.0);

  // two mean-driven spikes separate from the bulk
  auto phase = spectral_summary(generate(presets::three_group_phase(22500), 150, 2).X);
  CHECK(phase.eigenvalues[0] > 2.5);
  CHECK(phase.eigenvalues[1] > 2.5);
  CHECK(phase.eigenvalues[2] < 2.3);
}

TEST_CASE("group-centred resolvent against dense inversion") {
  const int p = 30, n = 12;
  std::vector<int> labels{1, 2, 1, 1, 2, 2, 1, 2, 1, 2, 2, 1};
  Eigen::MatrixXd X = random_matrix(p, n, 17);
  GroupCenteredResolvent res(X, labels);
  Eigen::MatrixXd bn = X * group_projector(labels) * X.transpose() / n;
  Eigen::MatrixXcd V = random_matrix(p, 3, 18).cast<cplx>();
  for (cplx zt : {cplx(-2.0, 0.0), cplx(1.0, 0.5), cplx(40.0, 0.0)}) {
    Eigen::MatrixXcd dense = (bn.cast<cplx>() - zt * Eigen::MatrixXcd::Identity(p, p)).inverse();
    Eigen::MatrixXcd want = dense * V;
    CHECK((res.apply(zt, V) - want).cwiseAbs().maxCoeff() < 1e-8);
    Eigen::MatrixXd P = random_matrix(p, 4, 19);
    Eigen::MatrixXcd bil = res.bilinear(zt, P);
    CHECK((bil - P.transpose().cast<cplx>() * dense * P.cast<cplx>()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((bil - bil.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
  // single group: B_n is the ordinary centred covariance
  std::vector<int> one(n, 1);
  GroupCenteredResolvent r1(X, one);
  Eigen::MatrixXd phi = centering_projection(n);
  CHECK((r1.factor() * r1.factor().transpose() - X * phi * X.transpose() / n).cwiseAbs().maxCoeff() < 1e-10);

  std::vector<int> bad{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2};
  try {
    GroupCenteredResolvent r(X, bad);
    FAIL("expected GroupTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GroupTooSmall);
  }
}

TEST_CASE("sesquilinear panel forms and limits") {
  // forms match the dense definition on a small instance
  {
    const int n = 12;
    const Eigen::Index p = 30;
    auto model = presets::two_group_identity(n, p);
    auto d = generate(model, n, 3);
    auto panel = sesquilinear_panel(d.X, d.labels, model, cplx(3.0, 0.0));
    const double c = static_cast<double>(p) / n;
    const cplx zt = c + std::sqrt(c) * 3.0;
    Eigen::MatrixXd bn = d.X * group_projector(d.labels) * d.X.transpose() / n;
    Eigen::MatrixXd P(p, 4);
    P.col(0) = d.X.leftCols(6).rowwise().mean() - model.means[0];
    P.col(1) = d.X.rightCols(6).rowwise().mean() - model.means[1];
    P.col(2) = model.means[0];
    P.col(3) = model.means[1];
    Eigen::MatrixXcd want =
        P.transpose().cast<cplx>() * (bn.cast<cplx>() - zt * Eigen::MatrixXcd::Identity(p, p)).inverse() *
        P.cast<cplx>() * (zt / std::sqrt(c));
    CHECK((panel.forms - want).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((panel.forms - panel.forms.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
  // worked limit: tau = 1, c_n = 100, z = 3
  {
    auto model = presets::single_population(10000);
    auto d = generate(model, 100, 5);
    auto panel = sesquilinear_panel(d.X, d.labels, model, cplx(3.0, 0.0));
    CHECK(panel.limit(0, 0).real() == doctest::Approx(-10.38197).epsilon(1e-6));
    CHECK(panel.limit(0, 1).real() == 0.0);
    CHECK(panel.limit(1, 1).real() == 0.0);  // zero mean
    // one draw sits near the limit
    CHECK(std::abs(panel.forms(0, 0) - panel.limit(0, 0)) < 0.5);
  }
  // mean block limit -mu_i^T mu_j / sqrt(c b)
  {
    auto model = presets::two_group_identity(50, 2500);
    auto d = generate(model, 50, 6);
    auto panel = sesquilinear_panel(d.X, d.labels, model, cplx(3.0, 0.0));
    CHECK(panel.limit(2, 2).real() == doctest::Approx(-1.0));
    CHECK(panel.limit(3, 3).real() == doctest::Approx(-1.0));
    CHECK(panel.limit(2, 3).real() == 0.0);
    CHECK(panel.limit(0, 2).real() == 0.0);
    CHECK(std::abs(panel.centering(2, 2).real() + 1.0) < 0.1);
  }
  auto model = presets::single_population(400);
  auto d = generate(model, 20, 1);
  try {
    sesquilinear_panel(d.X, d.labels, model, cplx(1.0, 0.0));
    FAIL("expected PoleViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PoleViolation);
  }
}

TEST_CASE("L covariance structure") {
  const cplx z(3.0, 0.0);
  auto m1 = presets::single_population(1000);
  auto lc = L_covariance(m1, 10, z, RegimeMode::Ultrahigh);
  CHECK(lc.s.real() == doctest::Approx(-0.381966).epsilon(1e-6));
  CHECK(lc(0, 0, 0, 0).real() == doctest::Approx(2.34164).epsilon(1e-5));
  const cplx s = lc.s;
  CHECK(std::abs((lc.s_prime - s * s) / (s * s * s * s) - 1.0 / (1.0 - s * s)) < 1e-12);

  auto m2 = presets::two_group_identity(200, 40000);
  auto l2 = L_covariance(m2, 200, z, RegimeMode::Ultrahigh);
  CHECK(l2(0, 0, 0, 0).real() == doctest::Approx(9.3666).epsilon(1e-4));
  CHECK(l2(0, 1, 0, 1).real() == doctest::Approx(4.6833).epsilon(1e-4));
  CHECK(l2(1, 0, 0, 1).real() == doctest::Approx(4.6833).epsilon(1e-4));
  CHECK(l2(0, 0, 1, 1) == cplx(0.0));
  CHECK(l2(2, 2, 2, 2) == cplx(0.0));
  CHECK(l2(0, 2, 0, 3) == cplx(0.0));

  // unified regime: symmetric in pair order and pair swap, close to the limit for large c
  auto model = presets::two_group_identity(40, 4000, NoiseLaw::exp_centered());
  model.means[1](0) = 0.7 * model.means[1](1);
  auto lu = L_covariance(model, 40, z, RegimeMode::Unified);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int l = 0; l < 4; ++l)
        for (int t = 0; t < 4; ++t) {
          CHECK(std::abs(lu(i, j, l, t) - lu(j, i, l, t)) < 1e-12);
          CHECK(std::abs(lu(i, j, l, t) - lu(i, j, t, l)) < 1e-12);
          CHECK(std::abs(lu(i, j, l, t) - lu(l, t, i, j)) < 1e-12);
        }
  auto lim = L_covariance(model, 40, z, RegimeMode::Ultrahigh);
  CHECK(std::abs(lu(0, 0, 0, 0) - lim(0, 0, 0, 0)) < 0.1 * std::abs(lim(0, 0, 0, 0)));
  CHECK(std::abs(lu(0, 2, 0, 2)) > 0.0);
  CHECK(std::abs(lu(0, 2, 1, 2)) == 0.0);
  Eigen::MatrixXcd cm = lu.matrix();
  CHECK(cm.rows() == 10);
  CHECK((cm - cm.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}
