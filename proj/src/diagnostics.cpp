#include "cfd/diagnostics.hpp"

#include "cfd/core.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cfd {

namespace {

void check(const Draws& chains) {
  require(!chains.empty(), "diagnostics: no chains");
  const std::size_t n = chains.front().size();
  require(n >= 4, "diagnostics: need at least 4 draws per chain");
  for (const auto& c : chains) require(c.size() == n, "diagnostics: chains differ in length");
}

Draws split(const Draws& chains) {
  Draws out;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return out;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

// Rank-normalise all draws jointly (average ranks for ties).
Draws rank_normalise(const Draws& chains) {
  std::vector<std::pair<double, std::size_t>> all;
  const std::size_t n = chains.front().size();
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) all.emplace_back(chains[c][i], c * n + i);
  std::sort(all.begin(), all.end());
  const double s = static_cast<double>(all.size());
  const boost::math::normal_distribution<double> normal;
  Draws out(chains.size(), std::vector<double>(n));
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    const double z = boost::math::quantile(normal, (rank - 0.375) / (s + 0.25));
    for (std::size_t k = i; k < j; ++k) out[all[k].second / n][all[k].second % n] = z;
    i = j;
  }
  return out;
}

double rhat_raw(const Draws& chains) {
  const double n = static_cast<double>(chains.front().size());
  const double m = static_cast<double>(chains.size());
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(var_of(c));
  }
  const double b = n * var_of(means);
  const double w = mean_of(vars);
  if (!(w > 0)) return m > 1 && b > 0 ? std::numeric_limits<double>::infinity() : 1.0;
  return std::sqrt(((n - 1) / n * w + b / n) / w);
}

double ess_raw(const Draws& chains) {
  const std::size_t n = chains.front().size();
  const double m = static_cast<double>(chains.size());
  std::vector<double> means, vars;
  for (const auto& c : chains) {
    means.push_back(mean_of(c));
    vars.push_back(var_of(c));
  }
  const double w = mean_of(vars);
  const double var_plus = (static_cast<double>(n) - 1) / n * w + (m > 1 ? var_of(means) : 0.0);
  if (!(var_plus > 0)) return static_cast<double>(n) * m;

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += (chains[c][i] - means[c]) * (chains[c][i + lag] - means[c]);
      acov += s / n;
    }
    acov /= m;
    return 1.0 - (w - acov) / var_plus;
  };

  // Geyer initial positive sequence, then the initial monotone adjustment.
  const auto nn = static_cast<std::ptrdiff_t>(n);
  std::vector<double> r(n, 0.0);
  double even = 1.0, odd = rho(1);
  r[0] = even;
  r[1] = odd;
  std::ptrdiff_t t = 1;
  while (t < nn - 3 && even + odd > 0.0) {
    even = rho(static_cast<std::size_t>(t + 1));
    odd = rho(static_cast<std::size_t>(t + 2));
    if (even + odd >= 0.0) {
      r[t + 1] = even;
      r[t + 2] = odd;
    }
    t += 2;
  }
  const std::ptrdiff_t max_t = t - 2;
  if (even > 0.0) r[max_t + 1] = even;
  for (t = 1; t <= max_t - 2; t += 2)
    if (r[t + 1] + r[t + 2] > r[t - 1] + r[t]) r[t + 1] = r[t + 2] = 0.5 * (r[t - 1] + r[t]);
  double tau = -1.0 + r[max_t + 1];
  for (std::ptrdiff_t k = 0; k <= max_t; ++k) tau += 2.0 * r[k];
  const double total = m * static_cast<double>(n);
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

std::vector<double> flatten(const Draws& chains) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  return all;
}

double indicator_ess(const Draws& chains, double threshold) {
  Draws ind = chains;
  for (auto& c : ind)
    for (double& x : c) x = x <= threshold ? 1.0 : 0.0;
  return ess_raw(split(ind));
}

}  // namespace

double split_rhat(const Draws& chains) {
  check(chains);
  const double bulk = rhat_raw(rank_normalise(split(chains)));
  const double med = quantile(flatten(chains), 0.5);
  Draws folded = chains;
  for (auto& c : folded)
    for (double& x : c) x = std::abs(x - med);
  const double tail = rhat_raw(rank_normalise(split(folded)));
  return std::max(bulk, tail);
}

double ess_bulk(const Draws& chains) {
  check(chains);
  return ess_raw(rank_normalise(split(chains)));
}

double ess_tail(const Draws& chains) {
  check(chains);
  const auto all = flatten(chains);
  return std::min(indicator_ess(chains, quantile(all, 0.05)), indicator_ess(chains, quantile(all, 0.95)));
}

double ess_basic(const Draws& chains) {
  check(chains);
  return ess_raw(split(chains));
}

ParamDiagnostics diagnose(const Draws& chains) {
  ParamDiagnostics d;
  d.rhat = split_rhat(chains);
  d.ess_bulk = ess_bulk(chains);
  d.ess_tail = ess_tail(chains);
  const auto all = flatten(chains);
  d.mean = mean_of(all);
  d.sd = std::sqrt(var_of(all));
  return d;
}

double wasserstein1(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "wasserstein1: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Integral of |F_a - F_b| over the merged support.
  std::vector<double> xs = a;
  xs.insert(xs.end(), b.begin(), b.end());
  std::sort(xs.begin(), xs.end());
  double w = 0.0;
  std::size_t ia = 0, ib = 0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    while (ia < a.size() && a[ia] <= xs[k]) ++ia;
    while (ib < b.size() && b[ib] <= xs[k]) ++ib;
    const double fa = static_cast<double>(ia) / a.size();
    const double fb = static_cast<double>(ib) / b.size();
    w += std::abs(fa - fb) * (xs[k + 1] - xs[k]);
  }
  return w;
}

}  // namespace cfd
