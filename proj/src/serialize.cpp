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

#include "stainnorm/serialize.hpp"

#include "stainnorm/metrics.hpp"

namespace stainnorm
{

namespace
{

using nlohmann::json;

const json & member(const json & j, const char * key)
{
  if (!j.is_object() || !j.contains(key))
  {
    throw Error(Errc::InvalidArgument, std::string("missing JSON field '") + key + "'");
  }
  return j.at(key);
}

template <typename T>
T read(const json & j, const char * key)
{
  try
  {
    return member(j, key).get<T>();
  }
  catch (const json::exception & e)
  {
    throw Error(Errc::InvalidArgument, std::string("bad JSON field '") + key + "': " + e.what());
  }
}

std::string_view solver_name(ConcentrationSolver s)
{
  return s == ConcentrationSolver::SparseCoding ? "sparse" : "nnls";
}

ConcentrationSolver parse_solver(const std::string & s)
{
  if (s == "sparse")
  {
    return ConcentrationSolver::SparseCoding;
  }
  if (s == "nnls")
  {
    return ConcentrationSolver::LeastSquares;
  }
  throw Error(Errc::InvalidArgument, "unknown concentration solver '" + s + "'");
}

} // namespace

json to_json(const StainMatrix & stains)
{
  json a = json::array();
  for (const auto & col : stains.columns)
  {
    for (double v : col)
    {
      a.push_back(v);
    }
  }
  return a;
}

StainMatrix stain_matrix_from_json(const json & j)
{
  if (!j.is_array() || j.size() != 6)
  {
    throw Error(Errc::InvalidArgument, "stain matrix must be an array of 6 numbers");
  }
  StainMatrix s;
  for (std::size_t i = 0; i < 6; ++i)
  {
    if (!j[i].is_number())
    {
      throw Error(Errc::InvalidArgument, "stain matrix must be an array of 6 numbers");
    }
    s.columns[i / 3][i % 3] = j[i].get<double>();
  }
  return s;
}

json to_json(const NormalizerOptions & o)
{
  return json{ { "macenko",
                 { { "od_threshold", o.macenko.od_threshold },
                   { "angle_percentile", o.macenko.angle_percentile },
                   { "concentration_percentile", o.macenko.concentration_percentile } } },
               { "snmf",
                 { { "sparsity_lambda", o.snmf.sparsity_lambda },
                   { "max_iterations", o.snmf.max_iterations },
                   { "tolerance", o.snmf.tolerance },
                   { "seed", o.snmf.seed },
                   { "max_samples", o.snmf.max_samples } } },
               { "vahadane_solver", solver_name(o.vahadane_solver) },
               { "vahadane_coding_lambda", o.vahadane_coding_lambda },
               { "background_intensity", o.background_intensity } };
}

NormalizerOptions normalizer_options_from_json(const json & j)
{
  NormalizerOptions o;
  const json & m = member(j, "macenko");
  o.macenko.od_threshold = read<double>(m, "od_threshold");
  o.macenko.angle_percentile = read<double>(m, "angle_percentile");
  o.macenko.concentration_percentile = read<double>(m, "concentration_percentile");
  const json & s = member(j, "snmf");
  o.snmf.sparsity_lambda = read<double>(s, "sparsity_lambda");
  o.snmf.max_iterations = read<int>(s, "max_iterations");
  o.snmf.tolerance = read<double>(s, "tolerance");
  o.snmf.seed = read<std::uint64_t>(s, "seed");
  o.snmf.max_samples = read<std::size_t>(s, "max_samples");
  o.vahadane_solver = parse_solver(read<std::string>(j, "vahadane_solver"));
  o.vahadane_coding_lambda = read<double>(j, "vahadane_coding_lambda");
  o.background_intensity = read<double>(j, "background_intensity");
  o.macenko.validate();
  o.snmf.validate();
  return o;
}

json to_json(const NormalizerModel & model)
{
  json payload;
  if (const auto * h = std::get_if<HistMatchPayload>(&model.payload))
  {
    payload["cdf"] = h->cdf;
  }
  else if (const auto * r = std::get_if<ReinhardPayload>(&model.payload))
  {
    payload["mean"] = r->lab_stats.mean;
    payload["std"] = r->lab_stats.std;
  }
  else
  {
    const auto & s = std::get<StainPayload>(model.payload);
    payload["stains"] = to_json(s.stains);
    payload["max_concentration"] = s.max_concentration;
  }
  return json{ { "method", to_string(model.method) }, { "payload", payload }, { "options", to_json(model.options) } };
}

NormalizerModel normalizer_model_from_json(const json & j)
{
  NormalizerModel model;
  model.method = parse_method(read<std::string>(j, "method"));
  model.options = normalizer_options_from_json(member(j, "options"));
  const json & p = member(j, "payload");
  switch (model.method)
  {
    case Method::HistMatch:
      model.payload = HistMatchPayload{ read<std::array<std::array<double, 256>, 3>>(p, "cdf") };
      break;
    case Method::Reinhard:
    {
      ReinhardPayload r;
      r.lab_stats.mean = read<std::array<double, 3>>(p, "mean");
      r.lab_stats.std = read<std::array<double, 3>>(p, "std");
      model.payload = r;
      break;
    }
    case Method::Macenko:
    case Method::Vahadane:
    {
      StainPayload s;
      s.stains = stain_matrix_from_json(member(p, "stains"));
      s.max_concentration = read<std::array<double, 2>>(p, "max_concentration");
      model.payload = s;
      break;
    }
  }
  return model;
}

nlohmann::ordered_json cluster_json(const ClusterModel & model, const std::vector<std::string> & ids,
                                    const std::vector<std::string> & representatives,
                                    const std::vector<std::pair<int, double>> & curve)
{
  if (ids.size() != model.assignments.size())
  {
    throw Error(Errc::InconsistentModel, "id list does not match the cluster assignments");
  }
  nlohmann::ordered_json j;
  j["k"] = model.k;
  j["seed"] = model.seed;
  nlohmann::ordered_json assignments = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < ids.size(); ++i)
  {
    assignments[ids[i]] = model.assignments[i];
  }
  j["assignments"] = assignments;
  j["representatives"] = representatives;
  nlohmann::ordered_json c = nlohmann::ordered_json::array();
  for (const auto & [k, w] : curve)
  {
    c.push_back({ k, w });
  }
  j["wcss_curve"] = c;
  return j;
}

std::string projection_csv(const std::vector<std::string> & ids, const Eigen::MatrixXd & projected)
{
  if (static_cast<Eigen::Index>(ids.size()) != projected.rows() || projected.cols() < 2)
  {
    throw Error(Errc::DimensionMismatch, "projection needs one 2-D row per id");
  }
  std::string out = "image_id,pc1,pc2\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
  {
    const auto r = static_cast<Eigen::Index>(i);
    out += csv_field(ids[i]) + "," + format_fixed(projected(r, 0)) + "," + format_fixed(projected(r, 1)) + "\n";
  }
  return out;
}

} // namespace stainnorm
