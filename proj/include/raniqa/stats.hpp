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

#pragma once

#include <array>
#include <vector>

#include "raniqa/common.hpp"

namespace raniqa {

struct ScorePairs {
  std::vector<double> predictions;
  std::vector<double> targets;

  size_t size() const { return predictions.size(); }
  void validate(size_t min_n) const;
};

// Spearman rank-order correlation with average-rank tie handling.
double srocc(const ScorePairs& pairs);

// Pearson correlation of two equal-length vectors.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct LogisticFit {
  // f(x) = b1 * (1/2 - 1/(1 + exp(b2 (x - b3)))) + b4 * x + b5
  std::array<double, 5> beta{};
  bool converged = false;
  int iterations = 0;
  double sse = 0.0;

  double operator()(double x) const;
};

// Least-squares fit of the 5-parameter logistic by damped Gauss-Newton.
// Initialization: b1 = range(y), b2 = +-4/std(x) (sign of the raw
// correlation), b3 = median(x), b4 = 0, b5 = mean(y). At most 500
// iterations; converged when the relative SSE change drops below 1e-10.
LogisticFit logistic_fit(const ScorePairs& pairs);

// Pearson correlation of predictions vs targets; fitted=true maps the
// predictions through logistic_fit first.
double plcc(const ScorePairs& pairs, bool fitted);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

// Welch's two-sample two-sided t-test. The p-value evaluates the Student-t
// CDF through the regularized incomplete beta function (absolute error
// below 1e-10).
TTestResult ttest_two_sided(const std::vector<double>& sample_a,
                            const std::vector<double>& sample_b);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

// Student-t CDF with df degrees of freedom.
double student_t_cdf(double t, double df);

}  // namespace raniqa
