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

// Inversion of a shared positive-definite matrix through U = L D L^T:
// factorization, V = L^{-1} by forward substitution, then
// U^{-1} = V^T D^{-1} V.

#pragma once

#include <cstddef>
#include <utility>

#include "ppgpr/party.hpp"
#include "ppgpr/protocols.hpp"
#include "ppgpr/sharing.hpp"

namespace ppgpr {

struct LdlFactors {
  SharedMatrix L;  // n x n, unit lower triangular
  SharedMatrix D;  // n x 1
};

// Column-by-column LDL^T. Column 1 costs one division; each later column k
// costs two rounds for d_k, two for the off-diagonal numerators and one
// division; the last column only needs d_n.
inline LdlFactors pp_cholesky_ldl(Party& P, const SharedMatrix& U) {
  if (U.rows != U.cols || U.rows == 0) throw std::invalid_argument("pp_cholesky_ldl: need a square matrix");
  auto sc = P.scope("pp_cholesky_ldl");
  const auto& R = P.ring();
  const std::size_t n = U.rows;
  LdlFactors out{public_identity(P, n), SharedMatrix(P.id(), n, 1)};
  SharedMatrix& L = out.L;
  SharedMatrix& D = out.D;
  D.values[0] = U(0, 0);
  if (n == 1) return out;

  set_block(L, 1, 0, ss_div_scalar(P, block(U, 1, 0, n - 1, 1), block(U, 0, 0, 1, 1)));

  for (std::size_t k = 1; k < n; ++k) {
    const SharedMatrix lk = block(L, k, 0, 1, k);
    const SharedMatrix dk = reshape(block(D, 0, 0, k, 1), 1, k);

    // d_k = u_kk - sum_m l_km^2 d_m
    SharedMatrix sq = ss_mul(P, lk, lk);
    SharedMatrix t = ss_mul(P, sq, dk);
    Word acc = U(k, k);
    for (Word v : t.values) acc -= v;
    D.values[k] = R.wrap(acc);
    if (k + 1 == n) break;

    // numerators u_hk - sum_m l_hm l_km d_m for h > k
    const std::size_t rest = n - k - 1;
    SharedMatrix prod = ss_mul(P, block(L, k + 1, 0, rest, k), broadcast_cols(lk, rest));
    SharedMatrix s = ss_matmul(P, prod, block(D, 0, 0, k, 1));
    SharedMatrix num = sub(R, block(U, k + 1, k, rest, 1), s);

    set_block(L, k + 1, k, ss_div_scalar(P, num, block(D, k, 0, 1, 1)));
  }
  return out;
}

// V = L^{-1}: row k is -l_{k,1:k-1} V_{1:k-1,1:k-1}, one product per row.
inline SharedMatrix pp_forward(Party& P, const SharedMatrix& L) {
  if (L.rows != L.cols) throw std::invalid_argument("pp_forward: need a square matrix");
  auto sc = P.scope("pp_forward");
  const auto& R = P.ring();
  const std::size_t n = L.rows;
  SharedMatrix V = public_identity(P, n);
  for (std::size_t k = 1; k < n; ++k) {
    SharedMatrix row = ss_matmul(P, block(L, k, 0, 1, k), block(V, 0, 0, k, k));
    set_block(V, k, 0, negate(R, std::move(row)));
  }
  return V;
}

// Lambda = V^T (D^{-1} V): one batched reciprocal and row scaling, then one
// product.
inline SharedMatrix pp_backward(Party& P, const SharedMatrix& V, const SharedMatrix& D) {
  if (V.rows != V.cols || D.size() != V.rows) throw std::invalid_argument("pp_backward: shape mismatch");
  auto sc = P.scope("pp_backward");
  const std::size_t n = V.rows;
  const int F = work_frac_bits(P.ring());
  SharedMatrix inv = ss_reciprocal_work(P, reshape(D, n, 1));
  SharedMatrix W = ss_mul(P, V, broadcast_rows(inv, n), F);
  return ss_matmul(P, transpose(V), W);
}

inline SharedMatrix pp_matinv(Party& P, const SharedMatrix& U) {
  auto sc = P.scope("pp_matinv");
  LdlFactors f = pp_cholesky_ldl(P, U);
  SharedMatrix V = pp_forward(P, f.L);
  return pp_backward(P, V, f.D);
}

}  // namespace ppgpr
