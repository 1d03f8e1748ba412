#include <doctest.h>

#include <cmath>
#include <map>

#include "rowamp/channels.hpp"
#include "rowamp/hermitian.hpp"
#include "rowamp/truncated_normal.hpp"

using namespace rowamp;

namespace {

CMat random_pd(Rng& rng, int m, double ridge = 0.3) {
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

// Posterior moments of one real dimension behind the quantizer by direct
// integration: p(z | cell) ~ N(z | mu, qd) P(z + w in cell), w ~ N(0, sw2).
void quadrature_moments(double mu, double qd, double sw2, double lo, double hi, double* mean,
                        double* var, double half_width = 8.0, double step = 1e-4) {
  const double sz = std::sqrt(qd);
  const double sw = std::sqrt(sw2);
  double mass = 0.0, m1 = 0.0, m2 = 0.0;
  const int n = static_cast<int>(std::round(2.0 * half_width / step));
  for (int i = 0; i < n; ++i) {
    const double z = mu - half_width * sz + (i + 0.5) * step * sz;
    const double pz = std::exp(-0.5 * (z - mu) * (z - mu) / qd);
    const double cell = normal_cdf((hi - z) / sw) - normal_cdf((lo - z) / sw);
    const double w = pz * cell;
    mass += w;
    m1 += w * z;
    m2 += w * z * z;
  }
  *mean = m1 / mass;
  *var = m2 / mass - (m1 / mass) * (m1 / mass);
}

}  // namespace

TEST_CASE("awgn posterior matches the gaussian product of prior and likelihood") {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const int m = 1 + static_cast<int>(rng.integer() % 3);
    const CMat sw = random_pd(rng, m);
    const CMat qz = random_pd(rng, m);
    const AwgnRowChannel ch(sw);
    const CVec z0 = random_vec(rng, m);
    const CVec y = random_vec(rng, m);

    CVec mean;
    CMat cov;
    ch.posterior_moments(y, z0, qz, &mean, &cov);
    const GaussianProduct gp = gaussian_product(z0, qz, y, sw);
    CHECK((mean - gp.mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((cov - gp.cov).cwiseAbs().maxCoeff() < 1e-10);

    CHECK(ch.log_emission(y, z0, qz) ==
          doctest::Approx(log_gaussian(y, z0, qz + sw)).epsilon(1e-10));
  }
}

TEST_CASE("awgn posterior limits") {
  Rng rng(5);
  const int m = 2;
  const CMat sw = random_pd(rng, m);
  const AwgnRowChannel ch(sw);
  const CVec z0 = random_vec(rng, m);
  const CVec y = random_vec(rng, m);

  CVec mean;
  CMat cov;
  // vanishing prior uncertainty pins the posterior at the prior mean
  ch.posterior_moments(y, z0, 1e-14 * CMat::Identity(m, m), &mean, &cov);
  CHECK((mean - z0).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(cov.cwiseAbs().maxCoeff() < 1e-10);

  // noiseless likelihood pins it at the observation
  const AwgnRowChannel clean(1e-14 * CMat::Identity(m, m));
  clean.posterior_moments(y, z0, random_pd(rng, m), &mean, &cov);
  CHECK((mean - y).cwiseAbs().maxCoeff() < 1e-8);

  CHECK(ch.conditional_entropy_per_row() ==
        doctest::Approx(m * std::log(M_PI) + log_det_pd(sw) + m).epsilon(1e-12));
  CHECK_THROWS_AS(AwgnRowChannel(CMat::Constant(1, 1, -1.0)), ConfigError);
}

TEST_CASE("quantizer tiles the line with upper-cell boundaries") {
  const QuantizedRowChannel q(1, 2, 2.0, 0.1);  // 4 cells over [-2, 2], width 1
  CHECK(q.step() == doctest::Approx(1.0));
  CHECK(q.label_of(-5.0) == 0);
  CHECK(q.label_of(-2.0) == 0);
  CHECK(q.label_of(-1.2) == 0);
  CHECK(q.label_of(-1.0) == 1);  // boundary goes up
  CHECK(q.label_of(-0.3) == 1);
  CHECK(q.label_of(0.0) == 2);
  CHECK(q.label_of(0.9) == 2);
  CHECK(q.label_of(1.0) == 3);
  CHECK(q.label_of(7.0) == 3);

  CHECK(q.midpoint(0) == doctest::Approx(-1.5));
  CHECK(q.midpoint(1) == doctest::Approx(-0.5));
  CHECK(q.midpoint(2) == doctest::Approx(0.5));
  CHECK(q.midpoint(3) == doctest::Approx(1.5));

  const auto [lo0, hi0] = q.cell_bounds(0);
  CHECK(std::isinf(lo0));
  CHECK(hi0 == doctest::Approx(-1.0));
  const auto [lo3, hi3] = q.cell_bounds(3);
  CHECK(lo3 == doctest::Approx(1.0));
  CHECK(std::isinf(hi3));

  // one bit degenerates to a sign quantizer
  const QuantizedRowChannel sign(1, 1, 1.0, 0.1);
  CHECK(sign.quantize_value(-3.0) == doctest::Approx(-0.5));
  CHECK(sign.quantize_value(-1e-12) == doctest::Approx(-0.5));
  CHECK(sign.quantize_value(0.0) == doctest::Approx(0.5));
  CHECK(sign.quantize_value(2.0) == doctest::Approx(0.5));

  CHECK_THROWS_AS(QuantizedRowChannel(1, 0, 1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(QuantizedRowChannel(1, 17, 1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(QuantizedRowChannel(1, 4, 0.0, 0.1), ConfigError);
  CHECK_THROWS_AS(QuantizedRowChannel(1, 4, 1.0, -0.5), ConfigError);
}

TEST_CASE("quantizer output map snaps both real dimensions") {
  const QuantizedRowChannel q(2, 3, 1.5, 0.05);
  Rng rng(7);
  const CVec t = random_vec(rng, 2);
  const CVec y = q.output_map(t);
  for (int i = 0; i < 2; ++i) {
    CHECK(y(i).real() == doctest::Approx(q.quantize_value(t(i).real())));
    CHECK(y(i).imag() == doctest::Approx(q.quantize_value(t(i).imag())));
  }

  // sampling = noise + output map, under the same draws
  Rng a(9), b(9);
  const CVec z = random_vec(rng, 2);
  const CVec ys = q.sample(z, a);
  CVec w(2);
  const double s = std::sqrt(0.05);
  for (int i = 0; i < 2; ++i) w(i) = s * b.cnormal();
  CHECK((ys - q.output_map(z + w)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cell probabilities are conserved and match sampling frequencies") {
  const QuantizedRowChannel q(1, 2, 1.8, 0.2);
  const double mu = 0.4;
  const double vt = 0.5;  // total variance of z + w in one real dim
  double total = 0.0;
  std::map<int, double> probs;
  for (int label = 0; label < 4; ++label) {
    const auto [lo, hi] = q.cell_bounds(label);
    const TruncatedMoments tm = truncated_normal_moments(mu, std::sqrt(vt), lo, hi);
    probs[label] = tm.prob;
    total += tm.prob;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(15);
  const int n = 400000;
  std::map<int, int> counts;
  const double sz = std::sqrt(vt - q.noise_var() / 2.0);
  for (int i = 0; i < n; ++i) {
    const CVec z = CVec::Constant(1, cplx(mu + sz * rng.normal(), 0.0));
    const CVec y = q.sample(z, rng);
    ++counts[q.label_of(y(0).real())];
  }
  for (int label = 0; label < 4; ++label) {
    CHECK(static_cast<double>(counts[label]) / n == doctest::Approx(probs[label]).epsilon(0.05));
  }
}

TEST_CASE("quantized posterior matches direct quadrature per real dimension") {
  const QuantizedRowChannel q(1, 3, 2.4, 0.15);
  const double qz_scalar = 0.8;  // complex variance; each real dim carries half
  for (const double z0r : {0.1, -1.3, 2.2}) {
    for (const int label : {0, 3, 7}) {
      CAPTURE(z0r);
      CAPTURE(label);
      const CVec y = CVec::Constant(1, cplx(q.midpoint(label), q.midpoint(2)));
      const CVec z0 = CVec::Constant(1, cplx(z0r, 0.3));
      const CMat qz = CMat::Constant(1, 1, qz_scalar);

      CVec mean;
      CMat cov;
      q.posterior_moments(y, z0, qz, &mean, &cov);

      const auto [lo, hi] = q.cell_bounds(label);
      double mre, vre;
      quadrature_moments(z0r, qz_scalar / 2.0, 0.15 / 2.0, lo, hi, &mre, &vre);
      const auto [lo2, hi2] = q.cell_bounds(2);
      double mim, vim;
      quadrature_moments(0.3, qz_scalar / 2.0, 0.15 / 2.0, lo2, hi2, &mim, &vim);

      CHECK(mean(0).real() == doctest::Approx(mre).epsilon(1e-5));
      CHECK(mean(0).imag() == doctest::Approx(mim).epsilon(1e-5));
      CHECK(cov(0, 0).real() == doctest::Approx(vre + vim).epsilon(1e-4));
      CHECK(cov(0, 0).imag() == 0.0);
    }
  }
}

TEST_CASE("fine quantization approaches the additive-noise posterior") {
  const double noise_var = 0.3;
  const double clip = 4.0;
  const QuantizedRowChannel q(2, 12, clip, noise_var);
  const AwgnRowChannel awgn(noise_var * CMat::Identity(2, 2));
  Rng rng(21);
  for (int rep = 0; rep < 5; ++rep) {
    const CVec z0 = 0.7 * random_vec(rng, 2);
    const CMat qz = random_pd(rng, 2, 0.2);
    const CMat qzd = qz.diagonal().asDiagonal();
    const CVec t = z0 + 0.5 * random_vec(rng, 2);
    const CVec y = q.output_map(t);

    CVec mq, ma;
    CMat cq, ca;
    q.posterior_moments(y, z0, qzd, &mq, &cq);
    awgn.posterior_moments(y, z0, qzd, &ma, &ca);
    CHECK((mq - ma).cwiseAbs().maxCoeff() < 2e-3);
    CHECK((cq - ca).cwiseAbs().maxCoeff() < 2e-3);
  }
  CHECK(q.diagonal_only());
  CHECK_THROWS_AS(q.conditional_entropy_per_row(), UnsupportedError);
}

TEST_CASE("quantized emission integrates the cell mass") {
  const QuantizedRowChannel q(1, 2, 1.6, 0.1);
  const cplx m(0.3, -0.2);
  const double cvar = 0.5;
  // log emission of a cell pair = sum of the per-dimension cell masses
  const int lr = 1, li = 3;
  const CVec y = CVec::Constant(1, cplx(q.midpoint(lr), q.midpoint(li)));
  const auto [lor, hir] = q.cell_bounds(lr);
  const auto [loi, hii] = q.cell_bounds(li);
  const double vt = cvar / 2.0 + 0.1 / 2.0;
  const double pr = truncated_normal_moments(m.real(), std::sqrt(vt), lor, hir).prob;
  const double pi = truncated_normal_moments(m.imag(), std::sqrt(vt), loi, hii).prob;
  const double expect = std::log(pr) + std::log(pi);
  CHECK(q.log_emission(y, CVec::Constant(1, m), CMat::Constant(1, 1, cvar)) ==
        doctest::Approx(expect).epsilon(1e-10));
}
