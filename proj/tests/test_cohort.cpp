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

#include "stainnorm/cohort.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>

using namespace stainnorm;

namespace
{

Eigen::MatrixXd pca_fixture()
{
  Eigen::MatrixXd x(6, 5);
  for (int i = 0; i < 6; ++i)
  {
    for (int j = 0; j < 5; ++j)
    {
      x(i, j) = double((i * 7 + j * 3) % 11) + 0.5 * i;
    }
  }
  return x;
}

Errc code_of(const std::function<void()> & f)
{
  try
  {
    f();
  }
  catch (const Error & e)
  {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

// Exhaustive optimum over every assignment of n points to k labels.
double brute_force_wcss(const Eigen::MatrixXd & pts, int k)
{
  const int n = int(pts.rows());
  std::vector<int> lab(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true)
  {
    std::set<int> used(lab.begin(), lab.end());
    if (int(used.size()) == k)
    {
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, pts.cols());
      std::vector<int> cnt(k, 0);
      for (int i = 0; i < n; ++i)
      {
        c.row(lab[i]) += pts.row(i);
        ++cnt[lab[i]];
      }
      for (int j = 0; j < k; ++j)
      {
        c.row(j) /= cnt[j];
      }
      best = std::min(best, wcss(pts, c, lab));
    }
    int i = 0;
    while (i < n && ++lab[i] == k)
    {
      lab[i++] = 0;
    }
    if (i == n)
    {
      return best;
    }
  }
}

} // namespace

TEST_SUITE("cohort")
{
  TEST_CASE("reference selection")
  {
    CHECK(select_reference_index({ 0.8, 0.97, 1.5 }) == 1);
    CHECK(select_reference_index({ 0.9, 1.1 }) == 0);
    CHECK(select_reference({ { "a", 2.0 }, { "b", 0.95 }, { "c", 1.05 } }) == "b");
    CHECK(code_of([] { select_reference_index({}); }) == Errc::EmptyCohort);
    CHECK(code_of([] { select_reference_index({ 1.0, std::nan("") }); }) == Errc::InvalidArgument);
  }

  TEST_CASE("histogram features")
  {
    const FeatureVector f = histogram_features(testing::diverse_slide(0, 48, 48), 32, "x");
    CHECK(f.image_id == "x");
    REQUIRE(f.values.size() == 96);
    for (int c = 0; c < 3; ++c)
    {
      double s = 0.0;
      for (int i = 0; i < 32; ++i)
      {
        s += f.values[c * 32 + i];
      }
      CHECK(s == doctest::Approx(1.0));
    }
  }

  TEST_CASE("pca against the sklearn oracle")
  {
    const PcaResult r = pca_fit_project(pca_fixture(), 2);
    CHECK(r.model.explained_variance(0) == doctest::Approx(29.470651053026565).epsilon(1e-10));
    CHECK(r.model.explained_variance(1) == doctest::Approx(19.993886514701622).epsilon(1e-10));
    CHECK(r.model.total_variance == doctest::Approx(59.641666666666666).epsilon(1e-12));
    const double comp[2][5] = {
      { 0.3805262751881258, 0.590517294134184, -0.3539447956169056, -0.18028168571444558, 0.5905172941341837 },
      { 0.5470437988433628, -0.21626891810870508, -0.4555303369921943, 0.6322109650638633, -0.216268918108705 },
    };
    const double proj[6][2] = {
      { -7.512443510690483, 0.774010298268831 },  { 6.069055649892947, 1.0144228197126353 },
      { -1.4200074393310127, -5.015563954643178 }, { -2.8129872925585278, 6.937085380894633 },
      { 6.582722840955519, 1.160016115061446 },    { -0.9063402482684413, -4.869970659294367 },
    };
    for (int c = 0; c < 2; ++c)
    {
      for (int j = 0; j < 5; ++j)
      {
        CHECK(r.model.components(c, j) == doctest::Approx(comp[c][j]).epsilon(1e-9));
      }
    }
    for (int i = 0; i < 6; ++i)
    {
      for (int c = 0; c < 2; ++c)
      {
        CHECK(r.projected(i, c) == doctest::Approx(proj[i][c]).epsilon(1e-9));
      }
    }
    CHECK((pca_project(r.model, pca_fixture()) - r.projected).norm() < 1e-12);
  }

  TEST_CASE("pca invariants")
  {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd x(30, 7);
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
      x.data()[i] = g(rng) * double(1 + i % 7);
    }
    const PcaResult r = pca_fit_project(x, 4);
    const Eigen::MatrixXd gram = r.model.components * r.model.components.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-10);
    for (int c = 1; c < 4; ++c)
    {
      CHECK(r.model.explained_variance(c) <= r.model.explained_variance(c - 1));
    }
    CHECK(r.model.explained_variance.sum() <= r.model.total_variance + 1e-9);
    for (int c = 0; c < 4; ++c)
    {
      Eigen::Index at = 0;
      r.model.components.row(c).cwiseAbs().maxCoeff(&at);
      CHECK(r.model.components(c, at) > 0.0);
      CHECK(r.projected.col(c).mean() == doctest::Approx(0.0).scale(1.0));
    }
    CHECK(code_of([] { pca_fit_project(Eigen::MatrixXd::Zero(1, 3)); }) == Errc::TooFewSamples);
    CHECK(code_of([] { pca_fit_project(Eigen::MatrixXd::Zero(3, 2), 3); }) == Errc::InvalidArgument);
    const std::vector<FeatureVector> ragged{ { "a", { 1, 2 } }, { "b", { 1, 2, 3 } } };
    CHECK(code_of([&] { pca_fit_project(ragged); }) == Errc::DimensionMismatch);
  }

  TEST_CASE("k-means on two clear groups")
  {
    Eigen::MatrixXd p(4, 1);
    p << 0, 1, 10, 11;
    const ClusterModel m = kmeans_cluster(p, 2, 0);
    CHECK(m.wcss == doctest::Approx(1.0));
    CHECK(m.assignments[0] == m.assignments[1]);
    CHECK(m.assignments[2] == m.assignments[3]);
    CHECK(m.assignments[0] != m.assignments[2]);
    auto reps = choose_representatives(m, p);
    std::sort(reps.begin(), reps.end());
    CHECK(reps == std::vector<std::size_t>{ 0, 2 });
    const auto ids = choose_representatives(m, p, { "s0", "s1", "s10", "s11" });
    CHECK(std::set<std::string>(ids.begin(), ids.end()) == std::set<std::string>{ "s0", "s10" });
  }

  TEST_CASE("k-means invariants and optimality on small sets")
  {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int t = 0; t < 40; ++t)
    {
      const int n = 3 + t % 5;
      const int k = 1 + t % std::min(n, 4);
      Eigen::MatrixXd p(n, 2);
      for (Eigen::Index i = 0; i < p.size(); ++i)
      {
        p.data()[i] = u(rng);
      }
      const ClusterModel m = kmeans_cluster(p, k, std::uint64_t(t));
      CAPTURE(t);
      CHECK(int(m.assignments.size()) == n);
      CHECK(std::set<int>(m.assignments.begin(), m.assignments.end()).size() == std::size_t(k));
      CHECK(m.wcss == doctest::Approx(wcss(p, m.centroids, m.assignments)).epsilon(1e-12));
      for (std::size_t i = 1; i < m.wcss_history.size(); ++i)
      {
        CHECK(m.wcss_history[i] <= m.wcss_history[i - 1] * (1.0 + 1e-12));
      }
      CHECK(m.wcss <= brute_force_wcss(p, k) * (1.0 + 1e-9) + 1e-12);
      const ClusterModel again = kmeans_cluster(p, k, std::uint64_t(t));
      CHECK(again.assignments == m.assignments);
      CHECK(again.wcss == m.wcss);
    }
  }

  TEST_CASE("k-means errors and the elbow curve")
  {
    Eigen::MatrixXd p(5, 2);
    p << 0, 0, 1, 0, 0, 1, 9, 9, 10, 9;
    CHECK(code_of([&] { kmeans_cluster(p, 6, 0); }) == Errc::KTooLarge);
    CHECK(code_of([&] { kmeans_cluster(p, 0, 0); }) == Errc::InvalidArgument);
    const auto curve = wcss_curve(p, { 1, 2, 3, 4, 5 }, 0);
    REQUIRE(curve.size() == 5);
    for (std::size_t i = 1; i < curve.size(); ++i)
    {
      CHECK(curve[i].first == curve[i - 1].first + 1);
      CHECK(curve[i].second <= curve[i - 1].second + 1e-12);
    }
    CHECK(curve.back().second == doctest::Approx(0.0));
    ClusterModel bad = kmeans_cluster(p, 2, 0);
    bad.assignments.pop_back();
    CHECK(code_of([&] { choose_representatives(bad, p); }) == Errc::InconsistentModel);
  }
}
