// Copyright 2026 The Bimodel Authors.
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

#ifndef BIMODEL_ERRORS_H_
#define BIMODEL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace bimodel {

// Broad failure classes. The C API and the CLI map these onto status and
// exit codes.
enum class ErrorKind {
  kDimension,
  kIndex,
  kContract,
  kParse,
  kUsage,
  kIo,
  kCheckpoint,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string &m) : Error(ErrorKind::kDimension, m) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string &m) : Error(ErrorKind::kIndex, m) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string &m) : Error(ErrorKind::kContract, m) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string &m) : Error(ErrorKind::kParse, m) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string &m) : Error(ErrorKind::kUsage, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string &m) : Error(ErrorKind::kIo, m) {}
};

class CheckpointError : public Error {
 public:
  explicit CheckpointError(const std::string &m) : Error(ErrorKind::kCheckpoint, m) {}
};

}  // namespace bimodel

#endif  // BIMODEL_ERRORS_H_
