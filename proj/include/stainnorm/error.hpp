/*=========================================================================
 *
 *  Copyright The stainnorm contributors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *         http://www.apache.org/licenses/LICENSE-2.0.txt
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 *
 *=========================================================================*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stainnorm
{

enum class Errc
{
  FileNotFound,
  DecodeError,
  IoError,
  InvalidFactor,
  InvalidTileSize,
  InconsistentGrid,
  WrongSpace,
  InvalidBackground,
  EmptyImage,
  InvalidRange,
  DivideByZero,
  InsufficientTissue,
  DegenerateStains,
  SingularBasis,
  DimensionMismatch,
  BinMismatch,
  EmptyCohort,
  TooFewSamples,
  KTooLarge,
  InconsistentModel,
  MissingCounterpart,
  InvalidArgument,
};

inline std::string_view to_string(Errc code) noexcept
{
  switch (code)
  {
    case Errc::FileNotFound:
      return "FileNotFound";
    case Errc::DecodeError:
      return "DecodeError";
    case Errc::IoError:
      return "IoError";
    case Errc::InvalidFactor:
      return "InvalidFactor";
    case Errc::InvalidTileSize:
      return "InvalidTileSize";
    case Errc::InconsistentGrid:
      return "InconsistentGrid";
    case Errc::WrongSpace:
      return "WrongSpace";
    case Errc::InvalidBackground:
      return "InvalidBackground";
    case Errc::EmptyImage:
      return "EmptyImage";
    case Errc::InvalidRange:
      return "InvalidRange";
    case Errc::DivideByZero:
      return "DivideByZero";
    case Errc::InsufficientTissue:
      return "InsufficientTissue";
    case Errc::DegenerateStains:
      return "DegenerateStains";
    case Errc::SingularBasis:
      return "SingularBasis";
    case Errc::DimensionMismatch:
      return "DimensionMismatch";
    case Errc::BinMismatch:
      return "BinMismatch";
    case Errc::EmptyCohort:
      return "EmptyCohort";
    case Errc::TooFewSamples:
      return "TooFewSamples";
    case Errc::KTooLarge:
      return "KTooLarge";
    case Errc::InconsistentModel:
      return "InconsistentModel";
    case Errc::MissingCounterpart:
      return "MissingCounterpart";
    case Errc::InvalidArgument:
      return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// batch drivers can record it per image and keep going.
class Error : public std::runtime_error
{
public:
  Error(Errc code, const std::string & what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what)
    , code_(code)
  {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

} // namespace stainnorm
