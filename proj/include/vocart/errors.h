// include/vocart/errors.h

// Copyright 2026  The vocart Authors

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

#ifndef VOCART_ERRORS_H_
#define VOCART_ERRORS_H_

#include <stdexcept>
#include <string>

namespace vocart {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Well-formed file in an encoding or layout we do not handle.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent run configuration: missing splits, registry mismatch,
/// missing noise file, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  BackendError(const std::string &backend, const std::string &what)
      : Error("vocoder backend '" + backend + "': " + what), backend_(backend) {}
  const std::string &backend() const { return backend_; }

 private:
  std::string backend_;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Writes a warning line to stderr. Library code never prints anything else.
void Warn(const std::string &msg);

}  // namespace vocart

#endif  // VOCART_ERRORS_H_
