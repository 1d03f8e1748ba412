#include <doctest.h>

#include <cmath>
#include <limits>

#include "rowamp/hermitian.hpp"
#include "rowamp/rng.hpp"
#include "rowamp/truncated_normal.hpp"
#include "rowamp/types.hpp"

using namespace rowamp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CMat random_pd(Rng& rng, int m, double ridge = 0.5) {
  CMat g(m, m);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) g(r, c) = rng.cnormal();
  }
  return herm(g * g.adjoint() / m + ridge * CMat::Identity(m, m));
}

CVec random_vec(Rng& rng, int m) {
  CVec v(m);
  for (int r = 0; r < m; ++r) v(r) = rng.cnormal();
  return v;
}

double max_abs(const CMat& a) { return a.cwiseAbs().maxCoeff(); }

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("truncated normal moments match high-precision reference values") {
  // mu, sigma, lo, hi, prob, log_prob, mean, var (50-digit reference run)
  struct Case {
    double mu, sigma, lo, hi, prob, log_prob, mean, var;
  };
  const Case cases[] = {
      {0.3, 1.2, -0.5, 1.0, 0.46767299885337135, -0.7599859476821344, 0.2561775413218868,
       0.17789861555233983},
      {0, 1, 1, 2.0, 0.13590512198327784, -1.9957982691807554, 1.3831690466315528,
       0.072742886100601289},
      {0, 1, 6.5, 7.0, 3.8880193294705343e-11, -23.970536164777029, 6.6311640766207388,
       0.012756814712823394},
      {0, 1, -7.0, -6.5, 3.8880193294705343e-11, -23.970536164777029, -6.6311640766207388,
       0.012756814712823394},
      {2, 0.5, 7, kInf, 7.6198530241605261e-24, -53.231285150512471, 7.049046616981256,
       0.0023613444564140653},
      {0, 1, 8, 9.0, 6.2198319858658303e-16, -35.013618593437148, 8.1211889929797971,
       0.014148542782748111},
  };
  for (const Case& c : cases) {
    CAPTURE(c.lo);
    CAPTURE(c.hi);
    const TruncatedMoments tm = truncated_normal_moments(c.mu, c.sigma, c.lo, c.hi);
    CHECK(!tm.underflow);
    CHECK(tm.prob == doctest::Approx(c.prob).epsilon(1e-12));
    CHECK(tm.log_prob == doctest::Approx(c.log_prob).epsilon(1e-12));
    CHECK(tm.mean == doctest::Approx(c.mean).epsilon(1e-10));
    CHECK(tm.var == doctest::Approx(c.var).epsilon(1e-8));
  }
}

TEST_CASE("truncated normal deep-tail cell falls back to a boundary point mass") {
  const TruncatedMoments tm = truncated_normal_moments(0.0, 1.0, 40.0, 41.0);
  CHECK(tm.underflow);
  CHECK(tm.prob == 0.0);
  CHECK(std::isfinite(tm.log_prob));
  CHECK(tm.log_prob < -700.0);
  CHECK(tm.mean == doctest::Approx(40.0));
  CHECK(tm.var == 0.0);

  const TruncatedMoments lo = truncated_normal_moments(0.0, 1.0, -41.0, -40.0);
  CHECK(lo.underflow);
  CHECK(lo.mean == doctest::Approx(-40.0));
}

TEST_CASE("truncated normal handles unbounded and degenerate cells") {
  const TruncatedMoments full = truncated_normal_moments(1.5, 2.0, -kInf, kInf);
  CHECK(full.prob == doctest::Approx(1.0));
  CHECK(full.mean == doctest::Approx(1.5));
  CHECK(full.var == doctest::Approx(4.0));

  // sigma ~ 0 degenerates to an indicator on the cell
  const TruncatedMoments in = truncated_normal_moments(0.5, 0.0, 0.0, 1.0);
  CHECK(in.prob == doctest::Approx(1.0));
  CHECK(in.mean == doctest::Approx(0.5));
  CHECK(in.var == 0.0);
  const TruncatedMoments out = truncated_normal_moments(2.0, 0.0, 0.0, 1.0);
  CHECK(out.prob == 0.0);
  CHECK(out.underflow);
}

TEST_CASE("scaled complementary error function matches reference values") {
  CHECK(erfcx_positive(0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(erfcx_positive(1.0) == doctest::Approx(0.427583576155807).epsilon(1e-13));
  CHECK(erfcx_positive(5.0) == doctest::Approx(0.11070463773306863).epsilon(1e-13));
  CHECK(erfcx_positive(10.0) == doctest::Approx(0.056140992743822586).epsilon(1e-13));
  CHECK(erfcx_positive(30.0) == doctest::Approx(0.018795888861416751).epsilon(1e-13));
}

TEST_CASE("gaussian product matches the dense-inverse formula") {
  Rng rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 1 + static_cast<int>(rng.integer() % 4);
    const CMat A = random_pd(rng, m);
    const CMat B = random_pd(rng, m);
    const CVec a = random_vec(rng, m);
    const CVec b = random_vec(rng, m);
    const GaussianProduct gp = gaussian_product(a, A, b, B);

    const CMat cov = (A.inverse() + B.inverse()).inverse();
    const CVec mean = cov * (A.inverse() * a + B.inverse() * b);
    CHECK(max_abs(gp.cov - cov) < 1e-10);
    CHECK((gp.mean - mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(gp.log_scale ==
          doctest::Approx(log_gaussian(a, b, A + B)).epsilon(1e-10));
  }
}

TEST_CASE("gaussian product accepts a point-mass factor") {
  Rng rng(7);
  const int m = 3;
  const CMat A = random_pd(rng, m);
  const CVec a = random_vec(rng, m);
  const CVec b = random_vec(rng, m);
  const GaussianProduct gp = gaussian_product(a, A, b, CMat::Zero(m, m));
  CHECK((gp.mean - b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(max_abs(gp.cov) < 1e-12);
}

TEST_CASE("structured block inverse matches dense inversion") {
  Rng rng(99);
  for (int rep = 0; rep < 30; ++rep) {
    const int m = 1 + static_cast<int>(rng.integer() % 4);
    const int tau = static_cast<int>(rng.integer() % 4);
    const CMat B = random_pd(rng, m);
    const CMat AmB = random_pd(rng, m);
    const CMat A = AmB + B;

    const CMat inv = block_symmetric_inverse(A, B, tau);
    const int k = tau + 1;
    const CMat ones = CMat::Ones(k, k);
    const CMat q = kron(CMat::Identity(k, k), AmB) + kron(ones, B);
    CHECK(max_abs(inv * q - CMat::Identity(k * m, k * m)) < 1e-10);
  }
}

TEST_CASE("structured block inverse scalar case matches the closed form") {
  const CMat A = CMat::Constant(1, 1, 3.0);
  const CMat B = CMat::Constant(1, 1, 1.0);
  const int tau = 2;
  const CMat inv = block_symmetric_inverse(A, B, tau);
  const double d = 2.0;  // A - B
  const double off = -1.0 / (d / 1.0 * d + (tau + 1) * d);
  CHECK(inv(0, 0).real() == doctest::Approx(1.0 / d + off).epsilon(1e-12));
  CHECK(inv(0, 1).real() == doctest::Approx(off).epsilon(1e-12));
  CHECK(inv(1, 2).real() == doctest::Approx(off).epsilon(1e-12));
}

TEST_CASE("structured block inverse rejects a singular overlap") {
  const CMat A = CMat::Identity(2, 2);
  const CMat B = CMat::Zero(2, 2);
  CHECK_THROWS_AS(block_symmetric_inverse(A, B, 1), SingularMatrixError);
}

TEST_CASE("psd repair utilities") {
  Rng rng(5);
  const CMat pd = random_pd(rng, 3);
  CHECK(is_psd(pd));
  CHECK(max_abs(ensure_psd(pd) - pd) < 1e-14);  // identity on PSD input

  CMat indef = pd;
  indef(0, 0) = cplx(-2.0, 0.0);
  CHECK(!is_psd(indef));
  const CMat fixed = ensure_psd(indef);
  CHECK(is_psd(fixed));
  CHECK(min_eigenvalue(fixed) >= -1e-12);

  bool clipped = false;
  const CMat cl = clip_psd(indef, &clipped);
  CHECK(clipped);
  CHECK(min_eigenvalue(cl) >= -1e-12);
  clipped = true;
  clip_psd(pd, &clipped);
  CHECK(!clipped);
}

TEST_CASE("hermitian inverse hits the identity and flags singularity") {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const int m = 1 + static_cast<int>(rng.integer() % 4);
    const CMat a = random_pd(rng, m);
    CHECK(max_abs(hermitian_inverse(a) * a - CMat::Identity(m, m)) < 1e-9);
    CHECK(max_abs(hermitian_inverse_strict(a) * a - CMat::Identity(m, m)) < 1e-9);
  }
  CHECK_THROWS_AS(hermitian_inverse_strict(CMat::Zero(2, 2)), SingularMatrixError);
  const CMat rank1 = CMat::Ones(3, 3);
  CHECK_THROWS_AS(hermitian_inverse_strict(rank1), SingularMatrixError);
}

TEST_CASE("hermitian square root squares back") {
  Rng rng(23);
  const CMat a = random_pd(rng, 4, 0.0);
  const CMat s = hermitian_sqrt(a);
  CHECK(max_abs(s * s - a) < 1e-10);
  CHECK(max_abs(hermitian_sqrt(CMat::Zero(2, 2))) == 0.0);
}

TEST_CASE("log density closed forms") {
  // scalar: log N_c = -log(pi v) - |x-m|^2 / v
  const CVec x = CVec::Constant(1, cplx(0.7, -0.2));
  const CVec m = CVec::Constant(1, cplx(0.1, 0.3));
  const double v = 0.8;
  const CMat cov = CMat::Constant(1, 1, v);
  const double expect = -std::log(M_PI * v) - std::norm(x(0) - m(0)) / v;
  CHECK(log_gaussian(x, m, cov) == doctest::Approx(expect).epsilon(1e-12));

  // diagonal bivariate factorizes
  CVec x2(2), m2(2);
  x2 << cplx(0.5, 0.0), cplx(-0.1, 0.4);
  m2 << cplx(0.0, 0.0), cplx(0.2, 0.2);
  CMat c2 = CMat::Zero(2, 2);
  c2(0, 0) = 0.5;
  c2(1, 1) = 2.0;
  const double e0 = -std::log(M_PI * 0.5) - std::norm(x2(0) - m2(0)) / 0.5;
  const double e1 = -std::log(M_PI * 2.0) - std::norm(x2(1) - m2(1)) / 2.0;
  CHECK(log_gaussian(x2, m2, c2) == doctest::Approx(e0 + e1).epsilon(1e-12));

  Rng rng(31);
  const CMat pd = random_pd(rng, 3);
  CHECK(log_det_pd(pd) == doctest::Approx(std::log(pd.determinant().real())).epsilon(1e-10));
}

TEST_CASE("complex gaussian sampler moments") {
  Rng rng(1234);
  const int m = 2;
  CVec mean(2);
  mean << cplx(1.0, -0.5), cplx(0.0, 2.0);
  CMat cov(2, 2);
  cov << cplx(1.5, 0.0), cplx(0.4, 0.3), cplx(0.4, -0.3), cplx(0.9, 0.0);
  cov = herm(cov);
  REQUIRE(is_psd(cov));

  const int n = 200000;
  CVec acc = CVec::Zero(m);
  CMat cacc = CMat::Zero(m, m);
  for (int i = 0; i < n; ++i) {
    const CVec s = sample_complex_gaussian(rng, mean, cov);
    acc += s;
    cacc += (s - mean) * (s - mean).adjoint();
  }
  CHECK((acc / n - mean).cwiseAbs().maxCoeff() < 0.02);
  CHECK(max_abs(cacc / n - cov) < 0.02);

  const CVec degenerate = sample_complex_gaussian(rng, mean, CMat::Zero(m, m));
  CHECK((degenerate - mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rng streams are deterministic and substreams decorrelate") {
  Rng a(555), b(555), c(556);
  for (int i = 0; i < 8; ++i) CHECK(a.integer() == b.integer());
  bool any_diff = false;
  Rng a2(555);
  for (int i = 0; i < 8; ++i) any_diff |= (a2.integer() != c.integer());
  CHECK(any_diff);

  Rng base(77);
  Rng s0 = base.substream(0);
  Rng s1 = base.substream(1);
  Rng s0b = base.substream(0);
  CHECK(s0.integer() == s0b.integer());
  CHECK(s0.integer() != s1.integer());

  // CN(0,1): unit variance split evenly across real and imaginary parts
  Rng g(909);
  double vr = 0.0, vi = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const cplx z = g.cnormal();
    vr += z.real() * z.real();
    vi += z.imag() * z.imag();
  }
  CHECK(vr / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(vi / n == doctest::Approx(0.5).epsilon(0.02));
}
