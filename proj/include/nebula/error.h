// include/nebula/error.h

// Copyright 2026  The Nebula Authors

// See COPYING at the top of the tree for authorship details
//
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

#ifndef NEBULA_ERROR_H_
#define NEBULA_ERROR_H_

#include <stdexcept>
#include <string>

namespace nebula {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input file is readable but its content is malformed or unsupported.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Model file problems: version, checksum, truncation, grid mismatch.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// EM could not produce a usable mixture for a channel.
class TrainingError : public Error {
 public:
  TrainingError(int channel, const std::string &what)
      : Error("training failed on channel " + std::to_string(channel) + ": " +
              what),
        channel_(channel) {}
  int channel() const { return channel_; }

 private:
  int channel_;
};

/// A documented precondition of an operation was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace nebula

#endif  // NEBULA_ERROR_H_
