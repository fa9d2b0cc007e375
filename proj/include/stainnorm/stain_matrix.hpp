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

#include <array>
#include <cmath>

namespace stainnorm
{

using Vec3 = std::array<double, 3>;

/// Two OD-RGB absorbance directions, hematoxylin first and eosin second.
/// Columns produced by the estimators are unit length and nonnegative.
struct StainMatrix
{
  std::array<Vec3, 2> columns{};

  const Vec3 & hematoxylin() const { return columns[0]; }
  const Vec3 & eosin() const { return columns[1]; }

  friend bool operator==(const StainMatrix &, const StainMatrix &) = default;
};

inline double dot(const Vec3 & a, const Vec3 & b)
{
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Vec3 & a)
{
  return std::sqrt(dot(a, a));
}

/// Unsigned angle between two directions in degrees.
inline double angle_degrees(const Vec3 & a, const Vec3 & b)
{
  const double c = dot(a, b) / (norm(a) * norm(b));
  return std::acos(std::fmin(1.0, std::fmax(-1.0, c))) * 180.0 / 3.14159265358979323846;
}

} // namespace stainnorm
