// Copyright 2026 the raniqa authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "raniqa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace raniqa {

void ScorePairs::validate(size_t min_n) const {
  if (predictions.size() != targets.size())
    throw ArgumentError("score pairs: prediction/target length mismatch");
  if (predictions.size() < min_n)
    throw ArgumentError("score pairs: need at least " +
                        std::to_string(min_n) + " samples");
  for (double v : predictions)
    if (!std::isfinite(v)) throw ArgumentError("non-finite prediction");
  for (double v : targets)
    if (!std::isfinite(v)) throw ArgumentError("non-finite target");
}

namespace {

bool is_constant(const std::vector<double>& v) {
  for (double x : v)
    if (x != v[0]) return false;
  return true;
}

// Average ranks (1-based), ties get the mean of their rank range.
std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {  // unbiased
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw ArgumentError("pearson: need >= 3 equal-length samples");
  if (is_constant(x) || is_constant(y))
    throw UndefinedStatError("pearson undefined for a constant vector");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

double srocc(const ScorePairs& pairs) {
  pairs.validate(3);
  if (is_constant(pairs.predictions))
    throw UndefinedStatError("srocc undefined: constant predictions");
  if (is_constant(pairs.targets))
    throw UndefinedStatError("srocc undefined: constant targets");
  return pearson(average_ranks(pairs.predictions),
                 average_ranks(pairs.targets));
}

double LogisticFit::operator()(double x) const {
  const double z = beta[1] * (x - beta[2]);
  // stable logistic
  const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                              : std::exp(z) / (1.0 + std::exp(z));
  return beta[0] * (0.5 - sig) + beta[3] * x + beta[4];
}

LogisticFit logistic_fit(const ScorePairs& pairs) {
  pairs.validate(5);
  const auto& x = pairs.predictions;
  const auto& y = pairs.targets;
  if (is_constant(x))
    throw UndefinedStatError("logistic fit undefined: constant predictions");
  const size_t n = x.size();

  LogisticFit fit;
  {
    const double ymax = *std::max_element(y.begin(), y.end());
    const double ymin = *std::min_element(y.begin(), y.end());
    std::vector<double> xs = x;
    std::nth_element(xs.begin(), xs.begin() + xs.size() / 2, xs.end());
    const double xmed = xs[xs.size() / 2];
    const double xstd = std::sqrt(std::max(sample_var(x), 1e-12));
    double corr_sign = 1.0;
    if (!is_constant(y)) corr_sign = pearson(x, y) >= 0.0 ? 1.0 : -1.0;
    fit.beta = {ymax - ymin, corr_sign * 4.0 / xstd, xmed, 0.0, mean_of(y)};
  }

  auto residuals_sse = [&](const std::array<double, 5>& b, double* r) {
    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double z = b[1] * (x[i] - b[2]);
      const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                  : std::exp(z) / (1.0 + std::exp(z));
      const double f = b[0] * (0.5 - sig) + b[3] * x[i] + b[4];
      const double res = f - y[i];
      if (r) r[i] = res;
      sse += res * res;
    }
    return sse;
  };

  std::vector<double> r(n), jac(n * 5);
  double sse = residuals_sse(fit.beta, r.data());
  double lambda = 1e-3;

  for (int iter = 0; iter < 500; ++iter) {
    fit.iterations = iter + 1;
    // analytic Jacobian of the residuals
    for (size_t i = 0; i < n; ++i) {
      const double z = fit.beta[1] * (x[i] - fit.beta[2]);
      const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                  : std::exp(z) / (1.0 + std::exp(z));
      const double dsig = sig * (1.0 - sig);
      jac[i * 5 + 0] = 0.5 - sig;
      jac[i * 5 + 1] = -fit.beta[0] * dsig * (x[i] - fit.beta[2]);
      jac[i * 5 + 2] = fit.beta[0] * dsig * fit.beta[1];
      jac[i * 5 + 3] = x[i];
      jac[i * 5 + 4] = 1.0;
    }
    // normal equations with Levenberg damping: (J^T J + lambda diag) d = -J^T r
    double jtj[25] = {0}, jtr[5] = {0};
    for (size_t i = 0; i < n; ++i) {
      for (int a = 0; a < 5; ++a) {
        jtr[a] += jac[i * 5 + a] * r[i];
        for (int b = a; b < 5; ++b) jtj[a * 5 + b] += jac[i * 5 + a] * jac[i * 5 + b];
      }
    }
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < a; ++b) jtj[a * 5 + b] = jtj[b * 5 + a];

    bool improved = false;
    for (int attempt = 0; attempt < 12 && !improved; ++attempt) {
      double m[25];
      std::copy(jtj, jtj + 25, m);
      for (int a = 0; a < 5; ++a)
        m[a * 5 + a] += lambda * std::max(jtj[a * 5 + a], 1e-12);
      // solve m d = -jtr by Gaussian elimination with partial pivoting
      double aug[5][6];
      for (int a = 0; a < 5; ++a) {
        for (int b = 0; b < 5; ++b) aug[a][b] = m[a * 5 + b];
        aug[a][5] = -jtr[a];
      }
      bool singular = false;
      for (int col = 0; col < 5; ++col) {
        int piv = col;
        for (int row = col + 1; row < 5; ++row)
          if (std::abs(aug[row][col]) > std::abs(aug[piv][col])) piv = row;
        if (std::abs(aug[piv][col]) < 1e-300) {
          singular = true;
          break;
        }
        if (piv != col)
          for (int b = col; b < 6; ++b) std::swap(aug[piv][b], aug[col][b]);
        for (int row = col + 1; row < 5; ++row) {
          const double f = aug[row][col] / aug[col][col];
          for (int b = col; b < 6; ++b) aug[row][b] -= f * aug[col][b];
        }
      }
      if (singular) {
        lambda *= 10.0;
        continue;
      }
      double d[5];
      for (int a = 4; a >= 0; --a) {
        double acc = aug[a][5];
        for (int b = a + 1; b < 5; ++b) acc -= aug[a][b] * d[b];
        d[a] = acc / aug[a][a];
      }
      std::array<double, 5> candidate = fit.beta;
      for (int a = 0; a < 5; ++a) candidate[a] += d[a];
      std::vector<double> rc(n);
      const double sse_c = residuals_sse(candidate, rc.data());
      if (std::isfinite(sse_c) && sse_c <= sse) {
        const double rel = (sse - sse_c) / std::max(sse, 1e-300);
        fit.beta = candidate;
        r.swap(rc);
        sse = sse_c;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        if (rel < 1e-10) {
          fit.converged = true;
          fit.sse = sse;
          return fit;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) {
      // damping exhausted; accept the best-so-far as converged-to-plateau
      fit.converged = true;
      fit.sse = sse;
      return fit;
    }
  }
  fit.converged = false;  // iteration budget exhausted; best-so-far returned
  fit.sse = sse;
  return fit;
}

double plcc(const ScorePairs& pairs, bool fitted) {
  pairs.validate(3);
  if (!fitted) return pearson(pairs.predictions, pairs.targets);
  const LogisticFit fit = logistic_fit(pairs);
  std::vector<double> mapped(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i)
    mapped[i] = fit(pairs.predictions[i]);
  if (is_constant(mapped))
    throw UndefinedStatError("plcc undefined: fitted curve is constant");
  return pearson(mapped, pairs.targets);
}

// ---- t-test -------------------------------------------------------------------

namespace {

// Modified-Lentz evaluation of the incomplete-beta continued fraction.
double beta_cont_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 3e-16) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * beta_cont_fraction(a, b, x) / a;
  return 1.0 - front * beta_cont_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (df <= 0.0) throw ArgumentError("degrees of freedom must be positive");
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

TTestResult ttest_two_sided(const std::vector<double>& sample_a,
                            const std::vector<double>& sample_b) {
  if (sample_a.size() < 2 || sample_b.size() < 2)
    throw ArgumentError("t-test needs at least 2 samples per group");
  const double na = static_cast<double>(sample_a.size());
  const double nb = static_cast<double>(sample_b.size());
  const double ma = mean_of(sample_a), mb = mean_of(sample_b);
  const double va = sample_var(sample_a), vb = sample_var(sample_b);
  if (va == 0.0 && vb == 0.0) {
    if (ma == mb) {
      // identical constants: no evidence of difference
      TTestResult r;
      r.t = 0.0;
      r.p = 1.0;
      r.df = na + nb - 2.0;
      return r;
    }
    throw UndefinedStatError("t-test undefined: both samples have zero variance");
  }
  const double sa = va / na, sb = vb / nb;
  const double se = std::sqrt(sa + sb);
  TTestResult r;
  r.t = (ma - mb) / se;
  // Welch-Satterthwaite degrees of freedom
  r.df = (sa + sb) * (sa + sb) /
         (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  const double cdf = student_t_cdf(-std::abs(r.t), r.df);
  r.p = std::min(1.0, 2.0 * cdf);
  return r;
}

}  // namespace raniqa
