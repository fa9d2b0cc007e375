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

#include "stainnorm/cohort.hpp"
#include "stainnorm/normalizers.hpp"
#include "stainnorm/stain_matrix.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace stainnorm
{

/// [h_r, h_g, h_b, e_r, e_g, e_b]
nlohmann::json to_json(const StainMatrix & stains);
StainMatrix stain_matrix_from_json(const nlohmann::json & j);

nlohmann::json to_json(const NormalizerOptions & options);
NormalizerOptions normalizer_options_from_json(const nlohmann::json & j);

/// {"method": ..., "payload": {...}, "options": {...}}
nlohmann::json to_json(const NormalizerModel & model);
NormalizerModel normalizer_model_from_json(const nlohmann::json & j);

/// {k, seed, assignments: {id: cluster}, representatives: [ids],
///  wcss_curve: [[k, wcss], ...]} with keys in that order.
nlohmann::ordered_json cluster_json(const ClusterModel & model, const std::vector<std::string> & ids,
                                    const std::vector<std::string> & representatives,
                                    const std::vector<std::pair<int, double>> & curve);

/// image_id,pc1,pc2
std::string projection_csv(const std::vector<std::string> & ids, const Eigen::MatrixXd & projected);

} // namespace stainnorm
