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

#include "support/synthetic.hpp"

#include "stainnorm/serialize.hpp"

#include <doctest.h>

using namespace stainnorm;

TEST_SUITE("serialize")
{
  TEST_CASE("stain matrix round trip and validation")
  {
    const StainMatrix s = testing::typical_stains();
    const nlohmann::json j = to_json(s);
    REQUIRE(j.size() == 6);
    CHECK(j[0].get<double>() == s.columns[0][0]);
    CHECK(j[3].get<double>() == s.columns[1][0]);
    CHECK(stain_matrix_from_json(nlohmann::json::parse(j.dump())) == s);
    CHECK_THROWS_AS(stain_matrix_from_json(nlohmann::json::array({ 1, 2, 3 })), Error);
  }

  TEST_CASE("options round trip")
  {
    NormalizerOptions o;
    o.macenko.od_threshold = 0.2;
    o.macenko.angle_percentile = 2.0;
    o.snmf.sparsity_lambda = 0.05;
    o.snmf.seed = 99;
    o.snmf.max_samples = 5000;
    o.vahadane_solver = ConcentrationSolver::LeastSquares;
    o.vahadane_coding_lambda = 0.02;
    o.background_intensity = 240.0;
    const NormalizerOptions r = normalizer_options_from_json(nlohmann::json::parse(to_json(o).dump()));
    CHECK(r.macenko.od_threshold == 0.2);
    CHECK(r.macenko.angle_percentile == 2.0);
    CHECK(r.snmf.sparsity_lambda == 0.05);
    CHECK(r.snmf.seed == 99);
    CHECK(r.snmf.max_samples == 5000);
    CHECK(r.vahadane_solver == ConcentrationSolver::LeastSquares);
    CHECK(r.vahadane_coding_lambda == 0.02);
    CHECK(r.background_intensity == 240.0);
  }

  TEST_CASE("model round trip reproduces the transform")
  {
    const RgbImage ref = testing::diverse_slide(0, 64, 64);
    const RgbImage src = testing::diverse_slide(3, 64, 64);
    for (Method m : { Method::HistMatch, Method::Reinhard, Method::Macenko, Method::Vahadane })
    {
      const NormalizerModel model = fit(m, ref);
      const NormalizerModel back = normalizer_model_from_json(nlohmann::json::parse(to_json(model).dump()));
      CHECK(back.method == m);
      CHECK(transform(back, src).image == transform(model, src).image);
    }
    CHECK_THROWS_AS(normalizer_model_from_json(nlohmann::json::parse(R"({"method":"nope"})")), Error);
  }

  TEST_CASE("cluster outputs")
  {
    ClusterModel m;
    m.k = 2;
    m.seed = 4;
    m.assignments = { 0, 1, 0 };
    const auto j = cluster_json(m, { "a", "b", "c" }, { "a", "b" }, { { 1, 5.0 }, { 2, 1.5 } });
    CHECK(j.dump() ==
          R"({"k":2,"seed":4,"assignments":{"a":0,"b":1,"c":0},"representatives":["a","b"],"wcss_curve":[[1,5.0],[2,1.5]]})");
    CHECK_THROWS_AS(cluster_json(m, { "a" }, {}, {}), Error);
    Eigen::MatrixXd p(2, 2);
    p << 1.0, -0.5, 0.25, 2.0;
    CHECK(projection_csv({ "x", "y,z" }, p) == "image_id,pc1,pc2\nx,1.000000,-0.500000\n\"y,z\",0.250000,2.000000\n");
  }
}
