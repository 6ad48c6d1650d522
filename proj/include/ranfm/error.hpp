// Copyright 2026 The ranfm Authors
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

namespace ranfm {

// Base of every error the library throws. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (bad argument, bad config).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes do not conform.
class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Input data is malformed, missing, or unusable.
class DataError : public Error {
 public:
  using Error::Error;
};

// Binary or JSON artifact fails validation.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// NaN/Inf showed up where finite values are required, or training diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ranfm
