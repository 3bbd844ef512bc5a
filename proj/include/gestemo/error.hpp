/*
 * Copyright 2026 The gestemo Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gestemo {

enum class ErrorKind {
  // event_core
  OutOfBounds,
  BadPolarity,
  NonMonotonicTime,
  BadSpec,
  // ingest
  ParseError,
  RaggedRows,
  IoError,
  UnknownId,
  MissingFile,
  UnknownLabel,
  DuplicateId,
  UnknownLayout,
  // align
  BadRange,
  EmptyTimeList,
  UnsortedTags,
  BadCuts,
  // encode
  EmptyStream,
  BadK,
  BadFactor,
  // networks
  ShapeMismatch,
  DimMismatch,
  UninitializedParams,
  NoRecordedForward,
  BadCheckpoint,
  // training / evaluation
  EmptyClass,
  EmptySplit,
  DataError,
  DivergedLoss,
  MissingFeatures,
  BadConfig,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::BadPolarity: return "BadPolarity";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::UnknownId: return "UnknownId";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::UnknownLayout: return "UnknownLayout";
    case ErrorKind::BadRange: return "BadRange";
    case ErrorKind::EmptyTimeList: return "EmptyTimeList";
    case ErrorKind::UnsortedTags: return "UnsortedTags";
    case ErrorKind::BadCuts: return "BadCuts";
    case ErrorKind::EmptyStream: return "EmptyStream";
    case ErrorKind::BadK: return "BadK";
    case ErrorKind::BadFactor: return "BadFactor";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::UninitializedParams: return "UninitializedParams";
    case ErrorKind::NoRecordedForward: return "NoRecordedForward";
    case ErrorKind::BadCheckpoint: return "BadCheckpoint";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::DataError: return "DataError";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::MissingFeatures: return "MissingFeatures";
    case ErrorKind::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable kind and, where it applies, the
/// offending element index (event row, tag position, file line).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind),
        index_(index) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

}  // namespace gestemo
