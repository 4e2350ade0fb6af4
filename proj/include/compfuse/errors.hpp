// Copyright 2026 The compfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace compfuse {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible matrix or sequence shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// API misuse: calling an operation outside its preconditions.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Zero-norm vectors, non-finite values and similar numeric failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or unresolvable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Broken invariant inside the library itself.
class InternalError : public Error {
 public:
  using Error::Error;
};

// Binary file format failures. Each has its own type so callers can tell a
// damaged header from a short file or a repeated key.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class CorruptHeaderError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedPayloadError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DuplicateIdError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DimensionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace compfuse
