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

#include <gtest/gtest.h>

#include <atomic>
#include <numeric>

#include "qnet/error.hpp"
#include "qnet/parallel.hpp"
#include "qnet/tensor.hpp"

namespace qnet {
namespace {

TEST(Tensor, ShapeAndSize) {
  Tensor t({2, 3, 4, 5});
  EXPECT_EQ(t.rank(), 4u);
  EXPECT_EQ(t.size(), 120);
  EXPECT_EQ(t.dim(3), 5);
  for (float v : t.values()) EXPECT_EQ(v, 0.0f);
}

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor({2, 0}), DimensionError);
  EXPECT_THROW(Tensor({1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), DimensionError);
}

TEST(Tensor, NhwcIndexing) {
  Tensor t({2, 2, 3, 2});
  std::iota(t.values().begin(), t.values().end(), 0.0f);
  EXPECT_EQ(t.at(1, 1, 2, 1), 23.0f);
  EXPECT_EQ(t.at(0, 1, 0, 1), 7.0f);
}

TEST(Tensor, ReshapeKeepsPayload) {
  Tensor t({2, 6});
  std::iota(t.values().begin(), t.values().end(), 0.0f);
  Tensor r = t.reshaped({2, 1, 2, 3});
  EXPECT_EQ(r.at(1, 0, 1, 2), 11.0f);
  EXPECT_THROW(t.reshaped({5, 2}), DimensionError);
}

TEST(Tensor, SliceAndConcatAreInverse) {
  Tensor t({3, 2, 2, 1});
  std::iota(t.values().begin(), t.values().end(), 0.0f);
  std::vector<Tensor> parts = {t.slice_batch(0, 1), t.slice_batch(1, 2), t.slice_batch(2, 3)};
  EXPECT_EQ(concat_batch(parts), t);
}

TEST(Parallel, CoversRangeOnce) {
  set_thread_count(3);
  std::vector<std::atomic<int>> hits(97);
  parallel_for(0, 97, [&](std::int64_t i) { hits[static_cast<std::size_t>(i)]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  set_thread_count(1);
}

TEST(Parallel, PropagatesExceptions) {
  set_thread_count(2);
  EXPECT_THROW(parallel_for(0, 10, [](std::int64_t i) {
                 if (i == 7) throw UsageError("boom");
               }),
               UsageError);
  set_thread_count(1);
}

TEST(Errors, ContextKeepsKind) {
  try {
    try {
      throw LookupError("missing kernel");
    } catch (const Error& e) {
      rethrow_with_context(e, "layer 'conv1'");
    }
  } catch (const LookupError& e) {
    EXPECT_NE(std::string(e.what()).find("conv1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("missing kernel"), std::string::npos);
    return;
  }
  FAIL() << "kind was lost";
}

}  // namespace
}  // namespace qnet
