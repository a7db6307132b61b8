#include "isodiff/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace isodiff {

Dataset mean_normalize(const Dataset& dataset) {
  const DesignLayout layout(dataset.design);
  std::vector<double> sum(layout.num_samples(), 0.0);
  std::vector<long> count(layout.num_samples(), 0);
  for (const Observation& o : dataset.observations) {
    const int sid = layout.sample_id(o.experiment, o.group, o.sample);
    sum[sid] += o.log_intensity;
    ++count[sid];
  }
  for (int sid = 0; sid < layout.num_samples(); ++sid)
    if (count[sid] == 0) {
      const auto c = layout.sample_coord(sid);
      throw std::invalid_argument(
          "cannot normalize: sample (" + std::to_string(c.experiment + 1) + "," +
          std::to_string(c.group + 1) + "," + std::to_string(c.index + 1) +
          ") has no observations");
    }

  Dataset out = dataset;
  for (Observation& o : out.observations) {
    const int sid = layout.sample_id(o.experiment, o.group, o.sample);
    o.log_intensity -= sum[sid] / static_cast<double>(count[sid]);
  }
  return out;
}

WelchResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("welch_ttest needs >= 2 values per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
  double va = 0.0, vb = 0.0;
  for (const double x : a) va += (x - ma) * (x - ma);
  for (const double x : b) vb += (x - mb) * (x - mb);
  va /= na - 1.0;
  vb /= nb - 1.0;

  WelchResult r;
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    // identical constant groups: no evidence either way
    r.t = 0.0;
    r.df = na + nb - 2.0;
    r.p = 1.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
  const boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(dist, -std::abs(r.t));
  return r;
}

std::vector<double> bh_adjust(const std::vector<double>& pvalues) {
  const std::size_t n = pvalues.size();
  for (const double p : pvalues)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("p-values must lie in [0,1]");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return pvalues[x] < pvalues[y]; });

  std::vector<double> q(n, 0.0);
  double running = 1.0;
  for (std::size_t r = n; r-- > 0;) {
    const double candidate = pvalues[order[r]] * static_cast<double>(n) /
                             static_cast<double>(r + 1);
    running = std::min(running, candidate);
    q[order[r]] = running;
  }
  return q;
}

std::vector<TTestRow> protein_ttest(const Dataset& dataset, int group_a, int group_b,
                                    double q_threshold) {
  const DesignInfo& d = dataset.design;
  if (group_a < 0 || group_a >= d.num_groups || group_b < 0 || group_b >= d.num_groups ||
      group_a == group_b)
    throw std::invalid_argument("protein_ttest needs two distinct valid groups");

  std::vector<std::vector<double>> pool_a(d.num_proteins), pool_b(d.num_proteins);
  for (const Observation& o : dataset.observations) {
    if (o.group == group_a) pool_a[o.protein].push_back(o.log_intensity);
    else if (o.group == group_b) pool_b[o.protein].push_back(o.log_intensity);
  }

  std::vector<TTestRow> rows(d.num_proteins);
  std::vector<double> testable_p;
  std::vector<int> testable_idx;
  for (int j = 0; j < d.num_proteins; ++j) {
    rows[j].protein = j;
    if (pool_a[j].size() < 2 || pool_b[j].size() < 2) {
      rows[j].testable = false;
      rows[j].t = rows[j].df = rows[j].p = rows[j].q =
          std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const WelchResult r = welch_ttest(pool_a[j], pool_b[j]);
    rows[j].testable = true;
    rows[j].t = r.t;
    rows[j].df = r.df;
    rows[j].p = r.p;
    testable_p.push_back(r.p);
    testable_idx.push_back(j);
  }

  const std::vector<double> q = bh_adjust(testable_p);
  for (std::size_t i = 0; i < testable_idx.size(); ++i) {
    TTestRow& row = rows[testable_idx[i]];
    row.q = q[i];
    row.significant = row.q <= q_threshold;
  }
  return rows;
}

}  // namespace isodiff
