// Copyright 2026 The qseek Authors.
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

#ifndef QSEEK_ERROR_H_
#define QSEEK_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qseek {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on caller-supplied arguments was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An id or key lookup failed.
class NotFound : public Error {
 public:
  using Error::Error;
};

// Malformed input file. line() is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message
                       : message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A model backend failed or returned an unusable reply.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Remote call failed after the retry policy was exhausted. status() is the
// last HTTP status seen, 0 for connection-level failures.
class TransportError : public BackendError {
 public:
  TransportError(const std::string& message, int status, int attempts)
      : BackendError(message + " (status " + std::to_string(status) +
                     ", attempts " + std::to_string(attempts) + ")"),
        status_(status),
        attempts_(attempts) {}

  int status() const { return status_; }
  int attempts() const { return attempts_; }

 private:
  int status_;
  int attempts_;
};

// The requested operation is not allowed in the current state.
class Conflict : public Error {
 public:
  using Error::Error;
};

}  // namespace qseek

#endif  // QSEEK_ERROR_H_
