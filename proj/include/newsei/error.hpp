// Copyright 2026 The newsei Authors.
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
#include <string_view>

namespace newsei {

/// Every failure the library reports carries one of these tags. The CLI maps
/// them onto exit codes and the machine-readable error report.
enum class ErrorKind {
  MalformedMarkup,
  BadDate,
  EmptyCorpus,
  SubjectNotInChunk,
  PairNotInChunk,
  DimensionMismatch,
  EmbedFailure,
  IoError,
  VersionMismatch,
  ProviderFailure,
  MissingPassages,
  ParseFailure,
  SeriesTooShort,
  ConfigError,
  MissingInput,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedMarkup: return "MalformedMarkup";
    case ErrorKind::BadDate: return "BadDate";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::SubjectNotInChunk: return "SubjectNotInChunk";
    case ErrorKind::PairNotInChunk: return "PairNotInChunk";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmbedFailure: return "EmbedFailure";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::ProviderFailure: return "ProviderFailure";
    case ErrorKind::MissingPassages: return "MissingPassages";
    case ErrorKind::ParseFailure: return "ParseFailure";
    case ErrorKind::SeriesTooShort: return "SeriesTooShort";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::MissingInput: return "MissingInput";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace newsei
