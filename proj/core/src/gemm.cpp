/*
 * Copyright 2026 The qnet Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gemm.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <vector>

namespace qnet::detail {
namespace {

using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

}  // namespace

void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
             float* c, bool accumulate) {
  ConstMap A(a, m, k);
  ConstMap B(b, k, n);
  Map C(c, m, n);
  if (accumulate) {
    C.noalias() += A * B;
  } else {
    C.noalias() = A * B;
  }
}

void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
             float* c, bool accumulate) {
  ConstMap A(a, k, m);
  ConstMap B(b, k, n);
  Map C(c, m, n);
  if (accumulate) {
    C.noalias() += A.transpose() * B;
  } else {
    C.noalias() = A.transpose() * B;
  }
}

void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
             float* c, bool accumulate) {
  ConstMap A(a, m, k);
  ConstMap B(b, n, k);
  Map C(c, m, n);
  if (accumulate) {
    C.noalias() += A * B.transpose();
  } else {
    C.noalias() = A * B.transpose();
  }
}

void gemm_s8(std::int64_t m, std::int64_t n, std::int64_t k, const std::int8_t* a,
             const std::int8_t* b, std::int32_t* c) {
  // Widen B once to int16 so the inner loop is a plain widening multiply-add
  // the compiler can vectorize.
  std::vector<std::int16_t> wide(static_cast<std::size_t>(k * n));
  std::copy(b, b + k * n, wide.begin());
  constexpr std::int64_t kRows = 4;
  std::int64_t i = 0;
  for (; i + kRows <= m; i += kRows) {
    std::int32_t* c0 = c + (i + 0) * n;
    std::int32_t* c1 = c + (i + 1) * n;
    std::int32_t* c2 = c + (i + 2) * n;
    std::int32_t* c3 = c + (i + 3) * n;
    std::fill(c0, c0 + n, 0);
    std::fill(c1, c1 + n, 0);
    std::fill(c2, c2 + n, 0);
    std::fill(c3, c3 + n, 0);
    for (std::int64_t p = 0; p < k; ++p) {
      const std::int32_t a0 = a[(i + 0) * k + p];
      const std::int32_t a1 = a[(i + 1) * k + p];
      const std::int32_t a2 = a[(i + 2) * k + p];
      const std::int32_t a3 = a[(i + 3) * k + p];
      const std::int16_t* brow = wide.data() + p * n;
      for (std::int64_t j = 0; j < n; ++j) {
        const std::int32_t bv = brow[j];
        c0[j] += a0 * bv;
        c1[j] += a1 * bv;
        c2[j] += a2 * bv;
        c3[j] += a3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    std::int32_t* crow = c + i * n;
    std::fill(crow, crow + n, 0);
    for (std::int64_t p = 0; p < k; ++p) {
      const std::int32_t av = a[i * k + p];
      const std::int16_t* brow = wide.data() + p * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace qnet::detail
