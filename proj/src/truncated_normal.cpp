#include "rowamp/truncated_normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rowamp {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLogUnderflow = -690.77552789821368;  // log(1e-300)

double phi(double x) {
  if (std::isinf(x)) return 0.0;
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// x * phi(x) with the x -> +-inf limit of 0.
double xphi(double x) {
  if (std::isinf(x)) return 0.0;
  return x * phi(x);
}

struct StdMoments {
  double log_prob;
  double mean;
  double var;
  bool underflow;
};

StdMoments std_moments(double a, double b);

// Cell entirely in the right tail (a >= 6).  Ratios are formed from scaled
// complementary error functions so the common exp(-a^2/2) factor cancels.
StdMoments tail_moments(double a, double b) {
  const double ea = erfcx_positive(a * kInvSqrt2);
  double eb = 0.0;
  double w = 0.0;
  if (!std::isinf(b)) {
    eb = erfcx_positive(b * kInvSqrt2);
    w = std::exp(-0.5 * (b - a) * (b + a));
  }
  const double d = ea - eb * w;
  StdMoments out;
  out.log_prob = -0.5 * a * a + std::log(0.5 * std::max(d, 1e-300));
  if (out.log_prob < kLogUnderflow || d <= 0.0) {
    out.mean = a;  // boundary nearest the bulk of the distribution
    out.var = 0.0;
    out.underflow = true;
    return out;
  }
  const double pa = 2.0 * kInvSqrt2Pi / d;
  const double pb = std::isinf(b) ? 0.0 : 2.0 * kInvSqrt2Pi * w / d;
  out.mean = pa - pb;
  const double second = 1.0 + a * pa - (std::isinf(b) ? 0.0 : b * pb);
  out.var = std::clamp(second - out.mean * out.mean, 0.0, 1.0);
  out.underflow = false;
  return out;
}

StdMoments std_moments(double a, double b) {
  if (b <= 0.0) {
    StdMoments m = std_moments(-b, -a);
    m.mean = -m.mean;
    return m;
  }
  if (a >= 6.0) return tail_moments(a, b);

  const double ca = std::isinf(a) ? 2.0 : std::erfc(a * kInvSqrt2);
  const double cb = std::isinf(b) ? 0.0 : std::erfc(b * kInvSqrt2);
  const double z = 0.5 * (ca - cb);
  StdMoments out;
  out.underflow = false;
  if (z <= 0.0) {
    // Cancellation on a vanishingly narrow central cell; use the midpoint.
    out.log_prob = -std::numeric_limits<double>::infinity();
    out.mean = 0.5 * (a + b);
    out.var = 0.0;
    out.underflow = true;
    return out;
  }
  out.log_prob = std::log(z);
  const double pa = phi(a) / z;
  const double pb = phi(b) / z;
  out.mean = pa - pb;
  const double second = 1.0 + (xphi(a) - xphi(b)) / z;
  out.var = std::clamp(second - out.mean * out.mean, 0.0, 1.0);
  return out;
}

}  // namespace

double erfcx_positive(double x) {
  if (x <= 25.0) return std::exp(x * x) * std::erfc(x);
  // Asymptotic series 1/(x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - ...).
  const double ix2 = 1.0 / (2.0 * x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -(2.0 * k - 1.0) * ix2;
    sum += term;
  }
  return sum / (x * std::sqrt(M_PI));
}

double normal_pdf(double x) { return phi(x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

TruncatedMoments truncated_normal_moments(double mu, double sigma, double lo, double hi) {
  TruncatedMoments out;
  if (!(sigma > 1e-150)) {
    const bool inside = mu >= lo && mu < hi;
    out.prob = inside ? 1.0 : 0.0;
    out.log_prob = inside ? 0.0 : -std::numeric_limits<double>::infinity();
    out.mean = std::clamp(mu, std::isinf(lo) ? mu : lo, std::isinf(hi) ? mu : hi);
    out.var = 0.0;
    out.underflow = !inside;
    return out;
  }
  const double a = std::isinf(lo) ? -std::numeric_limits<double>::infinity() : (lo - mu) / sigma;
  const double b = std::isinf(hi) ? std::numeric_limits<double>::infinity() : (hi - mu) / sigma;
  const StdMoments m = std_moments(a, b);
  out.prob = std::exp(m.log_prob);
  out.log_prob = m.log_prob;
  out.mean = mu + sigma * m.mean;
  out.var = sigma * sigma * m.var;
  out.underflow = m.underflow;
  return out;
}

}  // namespace rowamp
