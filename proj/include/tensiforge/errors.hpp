// Copyright 2026 The TensiForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace tensiforge {

// Exit-code families used by the command line front end.
enum class ErrorFamily { kInput = 2, kSolver = 3, kController = 4, kDevice = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, const std::string& what) : std::runtime_error(what), family_(family) {}
  ErrorFamily family() const noexcept { return family_; }

 private:
  ErrorFamily family_;
};

#define TENSIFORGE_DEFINE_ERROR(Name, Family)                                        \
  class Name : public Error {                                                        \
   public:                                                                           \
    explicit Name(const std::string& what) : Error(ErrorFamily::Family, what) {}     \
  }

TENSIFORGE_DEFINE_ERROR(LayerRuleViolation, kInput);
TENSIFORGE_DEFINE_ERROR(RangeError, kInput);
TENSIFORGE_DEFINE_ERROR(DegenerateRouting, kInput);
TENSIFORGE_DEFINE_ERROR(InvalidScene, kInput);
TENSIFORGE_DEFINE_ERROR(DegeneratePlate, kInput);
TENSIFORGE_DEFINE_ERROR(DegenerateGeometry, kInput);
TENSIFORGE_DEFINE_ERROR(TooManyTriangles, kInput);
TENSIFORGE_DEFINE_ERROR(ParseError, kInput);
TENSIFORGE_DEFINE_ERROR(UnboundActuator, kInput);
TENSIFORGE_DEFINE_ERROR(NumericalBlowup, kSolver);
TENSIFORGE_DEFINE_ERROR(NonConvergence, kSolver);
TENSIFORGE_DEFINE_ERROR(ControllerNonConvergence, kController);
TENSIFORGE_DEFINE_ERROR(Timeout, kDevice);
TENSIFORGE_DEFINE_ERROR(DeviceFault, kDevice);

#undef TENSIFORGE_DEFINE_ERROR

// Schema violations carry the JSON path of the first offending node.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(ErrorFamily::kInput, path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace tensiforge
