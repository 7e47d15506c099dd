// Copyright 2026 The ppgpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Gaussian process regression: kernels, the plaintext reference, and the
// shared construction and prediction pipeline.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppgpr/errors.hpp"
#include "ppgpr/matinv.hpp"
#include "ppgpr/party.hpp"
#include "ppgpr/protocols.hpp"
#include "ppgpr/sharing.hpp"

namespace ppgpr {

enum class KernelKind { kSquaredExponential, kMatern32 };

inline const char* kernel_name(KernelKind k) {
  return k == KernelKind::kSquaredExponential ? "se" : "matern32";
}

struct KernelConfig {
  KernelKind kind = KernelKind::kSquaredExponential;
  double length_scale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 0.1;

  void validate() const {
    if (!(length_scale > 0) || !(signal_variance > 0) || !(noise_variance > 0)) {
      throw ConfigError("kernel hyperparameters must be strictly positive");
    }
  }
};

// Kernel value as a function of the squared distance d.
inline double kernel_from_sqdist(double d, const KernelConfig& c) {
  if (c.kind == KernelKind::kSquaredExponential) {
    return c.signal_variance * std::exp(-d / (2.0 * c.length_scale * c.length_scale));
  }
  const double s = std::sqrt(3.0 * std::max(d, 0.0)) / c.length_scale;
  return c.signal_variance * (1.0 + s) * std::exp(-s);
}

inline double kernel_plaintext(std::span<const double> x, std::span<const double> xp,
                               const KernelConfig& c) {
  if (x.size() != xp.size()) throw std::invalid_argument("kernel_plaintext: dimension mismatch");
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - xp[i]) * (x[i] - xp[i]);
  return kernel_from_sqdist(d, c);
}

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat sqdist_plaintext(const Mat& A, const Mat& B) {
  Mat D(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j) D(i, j) = (A.row(i) - B.row(j)).squaredNorm();
  return D;
}

inline Mat gram_plaintext(const Mat& A, const Mat& B, const KernelConfig& c) {
  Mat D = sqdist_plaintext(A, B);
  return D.unaryExpr([&](double d) { return kernel_from_sqdist(d, c); });
}

struct Predictions {
  std::vector<double> mean;
  std::vector<double> variance;
};

// Reference posterior in double precision.
inline Predictions gpr_predict_plaintext(const Mat& X, const Vec& y, const Mat& Xs,
                                         const KernelConfig& c) {
  c.validate();
  if (X.rows() != y.size()) throw std::invalid_argument("gpr_predict_plaintext: |X| != |y|");
  Mat A = gram_plaintext(X, X, c);
  A.diagonal().array() += c.noise_variance;
  Eigen::LDLT<Mat> ldlt(A);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw std::runtime_error("gpr_predict_plaintext: covariance is numerically singular");
  }
  const Mat Ks = gram_plaintext(Xs, X, c);
  const Vec alpha = ldlt.solve(y);
  const Mat V = ldlt.solve(Ks.transpose());
  Predictions p;
  for (Eigen::Index i = 0; i < Xs.rows(); ++i) {
    p.mean.push_back(Ks.row(i).dot(alpha));
    p.variance.push_back(c.signal_variance - Ks.row(i).dot(V.col(i)));
  }
  return p;
}

// ---- losses ----------------------------------------------------------------

struct LossReport {
  double loss_mean = 0;      // mean of |mu - mu~| / |mu|
  double loss_variance = 0;  // mean of |s2 - s2~| / |s2|
  std::size_t excluded_mean = 0;      // entries with a zero reference
  std::size_t excluded_variance = 0;
};

inline LossReport loss_metrics(const Predictions& ref, const Predictions& got) {
  if (ref.mean.size() != got.mean.size() || ref.variance.size() != got.variance.size()) {
    throw std::invalid_argument("loss_metrics: prediction sets differ in size");
  }
  auto rel = [](const std::vector<double>& a, const std::vector<double>& b, std::size_t& skipped) {
    double sum = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) {
        ++skipped;
        continue;
      }
      sum += std::abs(a[i] - b[i]) / std::abs(a[i]);
      ++used;
    }
    return used ? sum / static_cast<double>(used) : 0.0;
  };
  LossReport r;
  r.loss_mean = rel(ref.mean, got.mean, r.excluded_mean);
  r.loss_variance = rel(ref.variance, got.variance, r.excluded_variance);
  return r;
}

// ||A Lambda - I||_F^2
inline double loss_mi(const Mat& A, const Mat& Lambda) {
  return (A * Lambda - Mat::Identity(A.rows(), A.cols())).squaredNorm();
}

// ---- shared pipeline -------------------------------------------------------

// Kernel matrix from shared squared distances.
inline SharedMatrix pp_kernel(Party& P, const SharedMatrix& dist, const KernelConfig& c,
                              ExpRangePolicy policy) {
  auto sc = P.scope("pp_kernel");
  const auto& codec = P.codec();
  const auto& R = P.ring();
  if (c.kind == KernelKind::kSquaredExponential) {
    SharedMatrix u = scale_public(codec, dist, -1.0 / (2.0 * c.length_scale * c.length_scale));
    SharedMatrix e = pp_exp(P, u, policy);
    return scale_public(codec, std::move(e), c.signal_variance);
  }
  SharedMatrix s = ss_sqrt(P, scale_int(R, dist, 3));
  SharedMatrix t = scale_public(codec, s, 1.0 / c.length_scale);
  SharedMatrix factor = scale_public(
      codec, add(R, t, public_constant(P, t.rows, t.cols, 1.0L, R.frac_bits)), c.signal_variance);
  SharedMatrix e = pp_exp(P, negate(R, t), policy);
  return ss_mul(P, factor, e);
}

// Gram matrix from the strictly lower triangle of the self-distances. The
// diagonal is the public signal variance and the upper triangle is mirrored,
// so the result is exactly symmetric.
inline SharedMatrix symmetric_gram(Party& P, const SharedMatrix& dist, const KernelConfig& c,
                                   ExpRangePolicy policy) {
  const std::size_t n = dist.rows;
  SharedMatrix K(P.id(), n, n);
  const Word diag = P.id() == 0 ? P.codec().encode(c.signal_variance) : Word{0};
  for (std::size_t i = 0; i < n; ++i) K(i, i) = diag;
  if (n < 2) return K;
  SharedMatrix lower(P.id(), n * (n - 1) / 2, 1);
  std::size_t t = 0;
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) lower.values[t++] = dist(i, j);
  const SharedMatrix k = pp_kernel(P, lower, c, policy);
  t = 0;
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) K(i, j) = K(j, i) = k.values[t++];
  return K;
}

struct GprModelShares {
  SharedMatrix X;
  SharedMatrix y;
  SharedMatrix K;
  SharedMatrix Inv;
  KernelConfig config;
};

struct PredictionShares {
  SharedMatrix mean;      // m x 1
  SharedMatrix variance;  // m x 1
};

inline GprModelShares pp_gpr_construct(Party& P, const SharedMatrix& X, const SharedMatrix& y,
                                       const KernelConfig& c,
                                       ExpRangePolicy policy = ExpRangePolicy::kClamp) {
  c.validate();
  if (y.size() != X.rows) throw std::invalid_argument("pp_gpr_construct: |X| != |y|");
  auto sc = P.scope("gpr_construct");
  const auto& R = P.ring();
  GprModelShares m{X, reshape(y, y.size(), 1), {}, {}, c};
  m.K = symmetric_gram(P, ss_dist(P, X, X, true), c, policy);
  SharedMatrix A = m.K;
  if (P.id() == 0) {
    const Word noise = P.codec().encode(c.noise_variance);
    for (std::size_t i = 0; i < A.rows; ++i) A(i, i) = ring_add(R, A(i, i), noise);
  }
  m.Inv = pp_matinv(P, A);
  return m;
}

// mu = k*^T Inv y and s2 = k(x*, x*) - k*^T Inv k*. The self-distance of a
// test point is structurally zero, so k(x*, x*) is the public signal
// variance.
inline PredictionShares pp_gpr_predict(Party& P, const GprModelShares& m, const SharedMatrix& Xs,
                                       ExpRangePolicy policy = ExpRangePolicy::kClamp) {
  auto sc = P.scope("gpr_predict");
  const auto& R = P.ring();
  SharedMatrix ks = pp_kernel(P, ss_dist(P, Xs, m.X), m.config, policy);
  SharedMatrix W = ss_matmul(P, ks, m.Inv);

  MulRound r(P);
  auto hmu = r.matmul(W, m.y);
  auto hq = r.hadamard(W, ks);
  r.run();

  PredictionShares out;
  out.mean = std::move(r.result(hmu));
  out.variance = sub(R, public_constant(P, Xs.rows, 1, m.config.signal_variance, R.frac_bits),
                     row_sums(R, r.result(hq)));
  return out;
}

}  // namespace ppgpr
