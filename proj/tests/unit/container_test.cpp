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

#include <filesystem>

#include "qnet/container.hpp"
#include "qnet/error.hpp"
#include "qnet/model.hpp"
#include "toy_models.hpp"

namespace qnet {
namespace {

Container sample() {
  Container c;
  c.dtype = DType::i8;
  c.graph_json = R"({"layers":[]})";
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  c.blobs.push_back(make_f32_blob("a/kernel", t));
  Blob q;
  q.name = "b/kernel";
  q.shape = {2, 2};
  q.type = ElementType::i8;
  q.axis = 1;
  q.scales = {0.5f, 0.25f};
  q.payload = {1, 0xff, 3, 0x80};
  c.blobs.push_back(q);
  return c;
}

TEST(Container, EncodeDecodeRoundTrip) {
  const Container c = sample();
  EXPECT_EQ(decode(encode(c)), c);
  EXPECT_EQ(blob_to_tensor(decode(encode(c)).blobs[0]), Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
}

TEST(Container, RejectsCorruption) {
  auto bytes = encode(sample());
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode(bad_version), FormatError);

  auto bad_dtype = bytes;
  bad_dtype[6] = 7;
  EXPECT_THROW(decode(bad_dtype), CapabilityError);

  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() - 1}) {
    EXPECT_THROW(decode(std::span(bytes.data(), cut)), FormatError) << cut;
  }
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode(trailing), FormatError);
}

TEST(Container, EncodeChecksPayloadSize) {
  Container c = sample();
  c.blobs[0].payload.pop_back();
  EXPECT_THROW(encode(c), IntegrityError);
}

TEST(Container, DtypeNames) {
  EXPECT_EQ(dtype_from_string("f16"), DType::f16);
  EXPECT_STREQ(to_string(DType::i8), "i8");
  EXPECT_THROW(dtype_from_string("bf16"), UsageError);
}

class ModelFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("qnet_container_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(ModelFiles, SaveLoadPreservesModel) {
  const auto m = testing::toy_classifier(5);
  const Model f32 = make_f32_model(m.graph, m.weights);
  save_model(dir_ / "a.qnet", f32);
  const Model back = load_model(dir_ / "a.qnet");
  EXPECT_EQ(back.weights, f32.weights);
  EXPECT_EQ(back.graph.to_json(), f32.graph.to_json());
  EXPECT_EQ(read_file(dir_ / "a.qnet"), encode(pack(f32)));

  const Model f16 = make_f16_model(f32);
  save_model(dir_ / "h.qnet", f16);
  const Model h = load_model(dir_ / "h.qnet");
  EXPECT_EQ(h.dtype, DType::f16);
  EXPECT_EQ(*h.half, *f16.half);
}

TEST_F(ModelFiles, SizeReport) {
  const auto m = testing::toy_classifier(5);
  const Model f32 = make_f32_model(m.graph, m.weights);
  save_model(dir_ / "a.qnet", f32);
  save_model(dir_ / "h.qnet", make_f16_model(f32));
  const auto rows = size_report({dir_ / "a.qnet", dir_ / "h.qnet"});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].ratio_vs_f32, 1.0);
  EXPECT_EQ(rows[1].bytes, static_cast<std::int64_t>(std::filesystem::file_size(dir_ / "h.qnet")));
  EXPECT_LT(rows[1].ratio_vs_f32, 1.0);

  const auto other = testing::two_layer_model(1);
  save_model(dir_ / "o.qnet", make_f32_model(other.graph, other.weights));
  EXPECT_THROW(size_report({dir_ / "a.qnet", dir_ / "o.qnet"}), UsageError);
}

TEST_F(ModelFiles, MissingFileIsFormatError) {
  EXPECT_THROW(load_model(dir_ / "nope.qnet"), FormatError);
}

TEST_F(ModelFiles, BlobMismatchesAreRejected) {
  const auto m = testing::toy_classifier(5);
  const Container good = pack(make_f32_model(m.graph, m.weights));
  Container renamed = good;
  renamed.blobs.back().name = "nowhere/kernel";
  EXPECT_THROW(unpack(renamed), LookupError);
  Container short_one = good;
  short_one.blobs.pop_back();
  EXPECT_THROW(unpack(short_one), FormatError);
  Container reshaped = good;
  reshaped.blobs.back().shape.push_back(1);
  EXPECT_THROW(unpack(reshaped), Error);
}

}  // namespace
}  // namespace qnet
