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

#include "stainnorm/normalizers.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace stainnorm::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitImageErrors = 1;
inline constexpr int kExitConfigError = 2;

struct RunConfig
{
  Method method = Method::HistMatch;
  std::filesystem::path reference;
  std::filesystem::path input;
  std::filesystem::path output;
  /// Directory of normalised images for `evaluate`.
  std::filesystem::path normalized;
  std::size_t bins = 256;
  std::size_t tile_size = 512;
  std::size_t downsample = 1;
  std::uint64_t seed = 0;
  /// Images processed concurrently; 0 uses every available thread.
  std::size_t workers = 0;
  int k = 8;
  ConcentrationSolver vahadane_solver = ConcentrationSolver::SparseCoding;
  bool ssim = true;
};

/// Raised for configuration problems; maps to exit code 2.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Overlays the keys of a JSON config object onto `config`. Unknown keys
/// and ill-typed values raise ConfigError.
void apply_config_json(const std::string & text, RunConfig & config);

/// Supported raster files of `dir`, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path & dir);

int cmd_normalize(const RunConfig & config, std::ostream & out, std::ostream & err);
int cmd_evaluate(const RunConfig & config, std::ostream & out, std::ostream & err);
int cmd_select_reference(const RunConfig & config, std::ostream & out, std::ostream & err);
int cmd_cluster(const RunConfig & config, std::ostream & out, std::ostream & err);

/// Parses the command line and dispatches. Returns the process exit code.
int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err);

} // namespace stainnorm::cli
