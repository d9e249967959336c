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

namespace qnet {

inline constexpr float kHalfMax = 65504.0f;

/// IEEE 754 binary16 narrowing with round-to-nearest-even. Results that would
/// overflow to infinity (including infinite inputs) saturate to +/-65504.
/// NaN maps to a quiet NaN encoding.
std::uint16_t float_to_half(float value);

/// Exact widening of a binary16 encoding.
float half_to_float(std::uint16_t bits);

}  // namespace qnet
