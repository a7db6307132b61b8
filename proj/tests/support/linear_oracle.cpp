#include "linear_oracle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace testsupport {

using isodiff::Dataset;
using isodiff::DesignLayout;
using isodiff::Hyperparameters;
using isodiff::Observation;

LinearModel build_linear_model(const Dataset& dataset, const Hyperparameters& hyper,
                               bool include_gamma) {
  const DesignLayout layout(dataset.design);
  const int G = dataset.design.num_groups;
  const int P = dataset.design.num_proteins;

  LinearModel m;
  int col = 0;
  m.kappa_cols.assign(layout.num_samples(), -1);
  for (int sid = 0; sid < layout.num_samples(); ++sid) {
    if (layout.is_reference(sid)) continue;
    m.kappa_cols[sid] = col++;
    m.prior_mean.push_back(hyper.a_kappa);
    m.prior_prec.push_back(hyper.b_kappa);
  }
  m.alpha_cols.resize(layout.num_spectra());
  for (int sp = 0; sp < layout.num_spectra(); ++sp) {
    m.alpha_cols[sp] = col++;
    m.prior_mean.push_back(hyper.a_alpha);
    m.prior_prec.push_back(hyper.b_alpha);
  }
  m.gamma_cols.assign(static_cast<std::size_t>(G) * P, -1);
  if (include_gamma)
    for (int g = 1; g < G; ++g)
      for (int j = 0; j < P; ++j) {
        m.gamma_cols[static_cast<std::size_t>(g) * P + j] = col++;
        m.prior_mean.push_back(hyper.a_gamma);
        m.prior_prec.push_back(hyper.b_gamma);
      }

  for (const Observation& o : dataset.observations) {
    std::vector<double> row(col, 0.0);
    const int sid = layout.sample_id(o.experiment, o.group, o.sample);
    if (m.kappa_cols[sid] >= 0) row[m.kappa_cols[sid]] = 1.0;
    row[m.alpha_cols[layout.spectrum_id(o.protein, o.spectrum)]] = 1.0;
    const int gcol = m.gamma_cols[static_cast<std::size_t>(o.group) * P + o.protein];
    if (gcol >= 0) row[gcol] = 1.0;
    m.X.push_back(std::move(row));
    m.y.push_back(o.log_intensity);
  }
  return m;
}

namespace {

struct Dense {
  Eigen::MatrixXd X;
  Eigen::VectorXd y, a, b;
};

Dense to_eigen(const LinearModel& m) {
  const int n = static_cast<int>(m.X.size());
  const int d = static_cast<int>(m.prior_mean.size());
  Dense out;
  out.X.resize(n, d);
  out.y.resize(n);
  for (int i = 0; i < n; ++i) {
    out.y(i) = m.y[i];
    for (int c = 0; c < d; ++c) out.X(i, c) = m.X[i][c];
  }
  out.a = Eigen::Map<const Eigen::VectorXd>(m.prior_mean.data(), d);
  out.b = Eigen::Map<const Eigen::VectorXd>(m.prior_prec.data(), d);
  return out;
}

}  // namespace

GaussianPosterior gaussian_posterior(const LinearModel& model, double tau) {
  const Dense d = to_eigen(model);
  Eigen::MatrixXd lambda = tau * d.X.transpose() * d.X;
  lambda.diagonal() += d.b;
  const Eigen::VectorXd rhs = d.b.cwiseProduct(d.a) + tau * d.X.transpose() * d.y;
  const Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success) throw std::runtime_error("posterior precision not SPD");
  const Eigen::VectorXd mean = llt.solve(rhs);
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(lambda.rows(), lambda.cols()));

  GaussianPosterior out;
  for (int i = 0; i < mean.size(); ++i) {
    out.mean.push_back(mean(i));
    out.sd.push_back(std::sqrt(cov(i, i)));
  }
  return out;
}

double log_marginal_likelihood(const LinearModel& model, double tau) {
  const Dense d = to_eigen(model);
  const int n = static_cast<int>(d.y.size());
  Eigen::MatrixXd lambda = tau * d.X.transpose() * d.X;
  lambda.diagonal() += d.b;
  const Eigen::VectorXd rhs = d.b.cwiseProduct(d.a) + tau * d.X.transpose() * d.y;
  const Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success) throw std::runtime_error("posterior precision not SPD");
  const Eigen::VectorXd mu = llt.solve(rhs);

  double log_det_lambda = 0.0;
  for (int i = 0; i < lambda.rows(); ++i)
    log_det_lambda += 2.0 * std::log(llt.matrixL()(i, i));
  double log_det_b = 0.0;
  for (int i = 0; i < d.b.size(); ++i) log_det_b += std::log(d.b(i));

  const double quad = tau * d.y.squaredNorm() + d.a.cwiseProduct(d.b).dot(d.a) - mu.dot(rhs);
  constexpr double log_2pi = 1.8378770664093453;
  return 0.5 * n * (std::log(tau) - log_2pi) + 0.5 * log_det_b - 0.5 * log_det_lambda -
         0.5 * quad;
}

SigmaPosterior sigma_posterior_quadrature(const Dataset& dataset,
                                          const Hyperparameters& hyper) {
  const LinearModel with_gamma = build_linear_model(dataset, hyper, true);
  const LinearModel without_gamma = build_linear_model(dataset, hyper, false);
  const double p1 = hyper.a_p / (hyper.a_p + hyper.b_p);

  // posterior density of u = log tau, integrated over theta and beta
  auto log_post = [&](double u) {
    const double tau = std::exp(u);
    const double m0 = log_marginal_likelihood(without_gamma, tau);
    const double m1 = log_marginal_likelihood(with_gamma, tau);
    const double mmax = std::max(m0, m1);
    const double mix =
        mmax + std::log((1.0 - p1) * std::exp(m0 - mmax) + p1 * std::exp(m1 - mmax));
    // Gamma(a,b) prior on tau, with the log-scale Jacobian folded in
    return mix + hyper.a_sigma * u - hyper.b_sigma * tau;
  };

  // normalise on a wide log-tau grid around the crude residual estimate
  const int n = 4001;
  const double lo = std::log(1e-4), hi = std::log(1e6);
  const double h = (hi - lo) / (n - 1);
  double log_max = -1e300;
  std::vector<double> logf(n);
  for (int i = 0; i < n; ++i) {
    logf[i] = log_post(lo + i * h);
    log_max = std::max(log_max, logf[i]);
  }
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double tau = std::exp(lo + i * h);
    const double f = w * std::exp(logf[i] - log_max);
    const double sigma = 1.0 / std::sqrt(tau);
    z += f;
    m1 += f * sigma;
    m2 += f * sigma * sigma;
  }
  m1 /= z;
  m2 /= z;
  return {m1, std::sqrt(std::max(m2 - m1 * m1, 0.0))};
}

}  // namespace testsupport
