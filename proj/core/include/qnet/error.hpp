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

#include <stdexcept>
#include <string>

namespace qnet {

enum class ErrorKind {
  dimension,
  usage,
  integrity,
  coverage,
  structure,
  lookup,
  config,
  format,
  capability,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class TypedError : public Error {
 public:
  explicit TypedError(const std::string& message) : Error(K, message) {}
};

using DimensionError = TypedError<ErrorKind::dimension>;
using UsageError = TypedError<ErrorKind::usage>;
using IntegrityError = TypedError<ErrorKind::integrity>;
using CoverageError = TypedError<ErrorKind::coverage>;
using StructureError = TypedError<ErrorKind::structure>;
using LookupError = TypedError<ErrorKind::lookup>;
using ConfigError = TypedError<ErrorKind::config>;
using FormatError = TypedError<ErrorKind::format>;
using CapabilityError = TypedError<ErrorKind::capability>;

/// Re-throws `e` as the same error kind with `context` prepended to the message.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

}  // namespace qnet
