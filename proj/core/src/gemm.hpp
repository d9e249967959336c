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

#pragma once

#include <cstdint>

namespace qnet::detail {

// All matrices are dense row-major. When `accumulate` is false the
// destination is overwritten.

// C[m,n] = A[m,k] * B[k,n]
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
             float* c, bool accumulate = false);

// C[m,n] = A[k,m]^T * B[k,n]
void gemm_tn(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
             float* c, bool accumulate = false);

// C[m,n] = A[m,k] * B[n,k]^T
void gemm_nt(std::int64_t m, std::int64_t n, std::int64_t k, const float* a, const float* b,
             float* c, bool accumulate = false);

// C[m,n] = A[m,k] * B[k,n] over int8 codes with int32 accumulation.
void gemm_s8(std::int64_t m, std::int64_t n, std::int64_t k, const std::int8_t* a,
             const std::int8_t* b, std::int32_t* c);

}  // namespace qnet::detail
