// vexkit/errors.h

// Copyright 2026  The vexkit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VEXKIT_ERRORS_H_
#define VEXKIT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace vexkit {

enum class ErrorKind {
  kInvalidArgument,  // shape mismatch, out-of-range label, bad call
  kConfig,           // bad run configuration or command-line usage
  kData,             // malformed or inconsistent input files
  kIo,               // file could not be opened / written
  kNumerical,        // non-finite loss, divergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit status for an error kind: 2 config, 3 data, 4 divergence,
// 1 for anything else.
int ExitCodeFor(ErrorKind kind);

[[noreturn]] void Fail(ErrorKind kind, const std::string &what);

}  // namespace vexkit

#endif  // VEXKIT_ERRORS_H_
