// Copyright 2026 The kmip Authors. All Rights Reserved.
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

namespace kmip {

enum class ErrorCode {
  kShape = 1,
  kParameter,
  kDomain,
  kParse,
  kValidation,
  kContract,
  kScheme,
  kIo,
  kNonFinite,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define KMIP_DEFINE_ERROR(Name, Code)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

KMIP_DEFINE_ERROR(ShapeError, kShape)
KMIP_DEFINE_ERROR(ParameterError, kParameter)
KMIP_DEFINE_ERROR(DomainError, kDomain)
KMIP_DEFINE_ERROR(ParseError, kParse)
KMIP_DEFINE_ERROR(ValidationError, kValidation)
KMIP_DEFINE_ERROR(ContractError, kContract)
KMIP_DEFINE_ERROR(SchemeError, kScheme)
KMIP_DEFINE_ERROR(IoError, kIo)
KMIP_DEFINE_ERROR(NonFiniteError, kNonFinite)

#undef KMIP_DEFINE_ERROR

}  // namespace kmip
