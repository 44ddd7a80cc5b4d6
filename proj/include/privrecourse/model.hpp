// Copyright 2026 The PrivRecourse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrecourse/data.hpp"
#include "privrecourse/error.hpp"
#include "privrecourse/points.hpp"
#include "privrecourse/privacy.hpp"
#include "privrecourse/random.hpp"

namespace privrecourse {

// A published black-box model: it answers with a label and nothing else.
// Graph construction, recourse and metrics are written against this concept
// only, so any label-only model can be dropped in.
template <typename C>
concept Classifier = requires(const C& c, RecordView x) {
  { c.Predict(x) } -> std::convertible_to<Label>;
  { c.input_width() } -> std::convertible_to<std::size_t>;
};

class LogisticModel {
 public:
  LogisticModel() = default;
  LogisticModel(std::vector<double> weights, double bias)
      : weights_(std::move(weights)), bias_(bias) {}

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  std::size_t input_width() const { return weights_.size(); }

  // Favorable iff w.x + b >= 0.
  Label Predict(RecordView x) const {
    if (x.size() != weights_.size()) {
      Fail(ErrorCode::kDimensionError, "model expects width " +
                                           std::to_string(weights_.size()) + ", got " +
                                           std::to_string(x.size()));
    }
    double margin = bias_;
    for (std::size_t i = 0; i < x.size(); ++i) margin += weights_[i] * x[i];
    return margin >= 0.0 ? kFavorable : kUnfavorable;
  }

  std::string favorable_label = "1";
  std::string schema_fingerprint;

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
};

static_assert(Classifier<LogisticModel>);

template <Classifier C>
Label Predict(const C& model, RecordView x) {
  return model.Predict(x);
}

inline nlohmann::json ToJson(const LogisticModel& m) {
  return {{"weights", m.weights()},
          {"bias", m.bias()},
          {"favorable_label", m.favorable_label},
          {"schema_fingerprint", m.schema_fingerprint}};
}

inline LogisticModel LogisticModelFromJson(const nlohmann::json& j) {
  LogisticModel m(j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>());
  m.favorable_label = j.value("favorable_label", std::string("1"));
  m.schema_fingerprint = j.value("schema_fingerprint", std::string());
  for (double w : m.weights()) {
    if (!std::isfinite(w)) Fail(ErrorCode::kParseError, "non-finite model weight");
  }
  return m;
}

// Regularized average logistic loss over parameters theta = (w, b):
//   (1/N) sum log(1 + exp(-s_i (w.x_i + b))) + lambda/2 * |theta|^2
// with s_i = +1 for favorable labels and -1 otherwise. The bias is
// regularized too; that keeps the objective lambda-strongly convex in every
// direction, which the output-perturbation sensitivity bound relies on.
struct LogisticObjective {
  const Dataset& data;
  double l2_strength;

  std::size_t dimension() const { return data.width() + 1; }

  double Value(const std::vector<double>& theta) const {
    double loss = 0.0;
    const std::size_t w = data.width();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.rows.row(i);
      double z = theta[w];
      for (std::size_t k = 0; k < w; ++k) z += theta[k] * x[k];
      const double s = data.labels[i] == kFavorable ? 1.0 : -1.0;
      loss += Softplus(-s * z);
    }
    double reg = 0.0;
    for (double t : theta) reg += t * t;
    return loss / static_cast<double>(data.size()) + 0.5 * l2_strength * reg;
  }

  std::vector<double> Gradient(const std::vector<double>& theta) const {
    const std::size_t w = data.width();
    std::vector<double> g(w + 1, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.rows.row(i);
      double z = theta[w];
      for (std::size_t k = 0; k < w; ++k) z += theta[k] * x[k];
      const double s = data.labels[i] == kFavorable ? 1.0 : -1.0;
      // d/dz softplus(-s z) = -s * sigmoid(-s z)
      const double coef = -s * Sigmoid(-s * z);
      for (std::size_t k = 0; k < w; ++k) g[k] += coef * x[k];
      g[w] += coef;
    }
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (std::size_t k = 0; k <= w; ++k) g[k] = g[k] * inv_n + l2_strength * theta[k];
    return g;
  }

  // Row-major d x d Hessian.
  std::vector<double> Hessian(const std::vector<double>& theta) const {
    const std::size_t w = data.width();
    const std::size_t d = w + 1;
    std::vector<double> h(d * d, 0.0);
    std::vector<double> xa(d, 1.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.rows.row(i);
      std::copy(x.begin(), x.end(), xa.begin());
      double z = theta[w];
      for (std::size_t k = 0; k < w; ++k) z += theta[k] * x[k];
      const double p = Sigmoid(z);
      const double c = p * (1.0 - p);
      if (c == 0.0) continue;
      for (std::size_t a = 0; a < d; ++a) {
        const double ca = c * xa[a];
        if (ca == 0.0) continue;
        for (std::size_t b = 0; b <= a; ++b) h[a * d + b] += ca * xa[b];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        h[a * d + b] *= inv_n;
        h[b * d + a] = h[a * d + b];
      }
      h[a * d + a] += l2_strength;
    }
    return h;
  }

  static double Softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  static double Sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }
};

struct LogisticOptions {
  double l2_strength = 1.5e-3;
  int max_iters = 100;
  double tol = 1e-10;
};

namespace detail {

// Solves A x = b for symmetric positive definite row-major A.
inline std::vector<double> CholeskySolve(std::vector<double> a, std::vector<double> b,
                                         std::size_t d) {
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
    if (!(diag > 0.0)) Fail(ErrorCode::kInvalidArgument, "matrix is not positive definite");
    const double l = std::sqrt(diag);
    a[j * d + j] = l;
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
      a[i * d + j] = v / l;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i * d + k] * b[k];
    b[i] /= a[i * d + i];
  }
  for (std::size_t i = d; i-- > 0;) {
    for (std::size_t k = i + 1; k < d; ++k) b[i] -= a[k * d + i] * b[k];
    b[i] /= a[i * d + i];
  }
  return b;
}

}  // namespace detail

struct TrainingTrace {
  int iterations = 0;
  double gradient_norm = 0.0;
  double loss = 0.0;
};

inline void RequireTwoClasses(const Dataset& ds) {
  bool pos = false, neg = false;
  for (Label l : ds.labels) (l == kFavorable ? pos : neg) = true;
  if (!pos || !neg) Fail(ErrorCode::kDegenerateLabels, "training data has a single class");
}

// Non-private reference trainer: damped Newton steps (Cholesky solve of the
// regularized Hessian, Armijo backtracking), stopping once the gradient norm
// drops to tol. The parameter count is the encoded width plus one, so the
// dense solve is cheap next to the pass over the data.
inline LogisticModel TrainLogistic(const Dataset& ds, const LogisticOptions& opts,
                                   TrainingTrace* trace = nullptr) {
  if (!(opts.l2_strength > 0.0)) Fail(ErrorCode::kInvalidRegularizer, "l2_strength must be > 0");
  RequireTwoClasses(ds);
  const LogisticObjective obj{ds, opts.l2_strength};
  const std::size_t d = obj.dimension();
  std::vector<double> theta(d, 0.0);
  double f = obj.Value(theta);
  auto g = obj.Gradient(theta);
  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  double gnorm = norm(g);
  int it = 0;
  for (; it < opts.max_iters && gnorm > opts.tol; ++it) {
    const auto dir = detail::CholeskySolve(obj.Hessian(theta), g, d);
    double slope = 0.0;
    for (std::size_t k = 0; k < d; ++k) slope += g[k] * dir[k];
    std::vector<double> next(d);
    double step = 1.0;
    double f_next = f;
    for (;;) {
      for (std::size_t k = 0; k < d; ++k) next[k] = theta[k] - step * dir[k];
      f_next = obj.Value(next);
      if (f_next <= f - 1e-4 * step * slope || step < 1e-10) break;
      step *= 0.5;
    }
    theta.swap(next);
    f = f_next;
    g = obj.Gradient(theta);
    gnorm = norm(g);
  }
  if (trace != nullptr) *trace = {it, gnorm, f};
  const double bias = theta.back();
  theta.pop_back();
  LogisticModel m(std::move(theta), bias);
  m.favorable_label = ds.schema.favorable_label;
  m.schema_fingerprint = ds.schema.Fingerprint();
  return m;
}

// Upper bound on |(x, 1)| for records whose continuous coordinates lie in
// [0,1] and whose categorical blocks are one-hot.
inline double AugmentedNormBound(const FeatureSchema& schema) {
  return std::sqrt(static_cast<double>(schema.features.size()) + 1.0);
}

// L2 sensitivity of the regularized optimum under add/remove of one record.
inline double OutputPerturbationSensitivity(const FeatureSchema& schema, std::size_t n,
                                            double l2_strength) {
  return 2.0 * AugmentedNormBound(schema) / (static_cast<double>(n) * l2_strength);
}

// epsilon-DP logistic regression by output perturbation: the regularized
// optimum plus a vector with density proportional to exp(-|eta| / scale),
// scale = sensitivity / epsilon. Direction is uniform on the sphere; the
// norm is Gamma(dim, scale).
inline LogisticModel TrainDpLogistic(const Dataset& ds, const LogisticOptions& opts,
                                     double epsilon, Rng& rng, BudgetAccountant& acc) {
  if (!(opts.l2_strength > 0.0)) Fail(ErrorCode::kInvalidRegularizer, "l2_strength must be > 0");
  if (!(epsilon > 0.0)) Fail(ErrorCode::kInvalidBudget, "epsilon_f must be > 0");
  const PrivacyBudget cost{epsilon, 0.0};
  if (!acc.CanSpend(cost)) {
    Fail(ErrorCode::kBudgetExceeded, "model training would exceed the privacy cap");
  }
  for (double v : ds.rows.values()) {
    if (v < 0.0 || v > 1.0) {
      Fail(ErrorCode::kInvalidArgument, "DP training expects preprocessed records in [0,1]");
    }
  }
  LogisticModel base = TrainLogistic(ds, opts);
  const std::size_t dim = base.input_width() + 1;
  const double scale = OutputPerturbationSensitivity(ds.schema, ds.size(), opts.l2_strength) /
                       epsilon;
  std::vector<double> direction(dim);
  double n2 = 0.0;
  for (double& d : direction) {
    d = rng.Normal();
    n2 += d * d;
  }
  const double radius = rng.GammaInteger(static_cast<int>(dim), scale);
  const double factor = radius / std::sqrt(n2);
  std::vector<double> w = base.weights();
  for (std::size_t k = 0; k < w.size(); ++k) w[k] += factor * direction[k];
  const double b = base.bias() + factor * direction.back();
  acc.Spend("model", cost);
  LogisticModel m(std::move(w), b);
  m.favorable_label = base.favorable_label;
  m.schema_fingerprint = base.schema_fingerprint;
  return m;
}

template <Classifier C>
double Accuracy(const C& model, const Dataset& ds) {
  if (ds.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) hits += model.Predict(ds.rows.row(i)) == ds.labels[i];
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

}  // namespace privrecourse
