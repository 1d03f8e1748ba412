#pragma once

namespace rowamp {

struct TruncatedMoments {
  double prob;      // P(lo <= t < hi) under N(mu, sigma^2)
  double log_prob;  // log of the same, finite even when prob underflows
  double mean;      // E[t | lo <= t < hi]
  double var;       // Var[t | lo <= t < hi]
  bool underflow;   // cell probability < 1e-300; mean/var fell back to the
                    // nearest boundary point mass
};

// Moments of N(mu, sigma^2) truncated to [lo, hi].  lo may be -inf and hi
// +inf.  Far-tail cells (standardized arguments beyond ~6) are evaluated
// through scaled complementary error functions so the ratios stay finite.
TruncatedMoments truncated_normal_moments(double mu, double sigma, double lo, double hi);

// exp(x^2) erfc(x) for x >= 0 without overflow.
double erfcx_positive(double x);

// Standard normal pdf and cdf.
double normal_pdf(double x);
double normal_cdf(double x);

}  // namespace rowamp
