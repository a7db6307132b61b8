#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace testsupport {

Moments quadrature_moments(const std::function<double(double)>& log_density, double lo,
                           double hi, int n) {
  if (n % 2 == 0) ++n;
  const double h = (hi - lo) / (n - 1);
  std::vector<double> logf(n);
  double log_max = -1e300;
  for (int i = 0; i < n; ++i) {
    logf[i] = log_density(lo + i * h);
    log_max = std::max(log_max, logf[i]);
  }
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double x = lo + i * h;
    const double f = w * std::exp(logf[i] - log_max);
    z += f;
    m1 += f * x;
    m2 += f * x * x;
  }
  m1 /= z;
  m2 /= z;
  return {m1, std::sqrt(std::max(m2 - m1 * m1, 0.0))};
}

double sample_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (const double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<double>& xs) {
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (const double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_pvalue(double statistic, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

MomentCheck check_moments(const std::vector<double>& samples, double mean, double sd,
                          double excess_kurtosis) {
  if (samples.size() < 2) throw std::invalid_argument("need at least two samples");
  const double n = static_cast<double>(samples.size());
  MomentCheck out;
  out.mean_z = (sample_mean(samples) - mean) / (sd / std::sqrt(n));
  // Var(s^2) ~ (mu4 - sigma^4)/n, so SE(s) ~ sigma sqrt((kurt_ex + 2)/(4n))
  const double se_sd = sd * std::sqrt((excess_kurtosis + 2.0) / (4.0 * n));
  out.sd_z = (sample_sd(samples) - sd) / se_sd;
  return out;
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

double gamma_excess_kurtosis(double shape) { return 6.0 / shape; }

double beta_excess_kurtosis(double a, double b) {
  const double s = a + b;
  return 6.0 * ((a - b) * (a - b) * (s + 1.0) - a * b * (s + 2.0)) /
         (a * b * (s + 2.0) * (s + 3.0));
}

}  // namespace testsupport
