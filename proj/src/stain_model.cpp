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

#include "stainnorm/stain_model.hpp"
#include "stainnorm/colorspace.hpp"
#include "stainnorm/kernels.hpp"
#include "stainnorm/parallel.hpp"
#include "stainnorm/pixel_ops.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace stainnorm
{

namespace
{

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinExtremeAngleDeg = 1.0;
constexpr int kBasisSteps = 50;
constexpr int kBacktracks = 40;

using Basis = Eigen::Matrix<double, 3, 2>;

void require_od(const PlanarImage & od)
{
  if (od.space() != ColorSpace::OpticalDensity)
  {
    throw Error(Errc::WrongSpace, "stain estimation expects an optical-density image");
  }
}

kernels::OdPlanes planes_of(const PlanarImage & od)
{
  return { od.plane(0), od.plane(1), od.plane(2) };
}

Vec3 to_vec3(const Eigen::Vector3d & v)
{
  return { v[0], v[1], v[2] };
}

Basis to_basis(const StainMatrix & s)
{
  Basis w;
  for (int c = 0; c < 2; ++c)
  {
    for (int r = 0; r < 3; ++r)
    {
      w(r, c) = s.columns[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
    }
  }
  return w;
}

StainMatrix to_stain_matrix(const Basis & w)
{
  StainMatrix s;
  for (int c = 0; c < 2; ++c)
  {
    s.columns[static_cast<std::size_t>(c)] = to_vec3(w.col(c));
  }
  return s;
}

Eigen::Matrix3d gram_of_rows(const Eigen::MatrixX3d & v)
{
  using Acc = std::array<double, 6>;
  const Acc xx = parallel::chunked_reduce(
    static_cast<std::size_t>(v.rows()),
    Acc{},
    [&](std::size_t begin, std::size_t end) {
      Acc a{};
      for (std::size_t i = begin; i < end; ++i)
      {
        const auto row = static_cast<Eigen::Index>(i);
        const double r = v(row, 0);
        const double g = v(row, 1);
        const double b = v(row, 2);
        a[0] += r * r;
        a[1] += r * g;
        a[2] += r * b;
        a[3] += g * g;
        a[4] += g * b;
        a[5] += b * b;
      }
      return a;
    },
    [](Acc a, const Acc & b) {
      for (std::size_t k = 0; k < a.size(); ++k)
      {
        a[k] += b[k];
      }
      return a;
    });
  Eigen::Matrix3d g;
  g << xx[0], xx[1], xx[2], xx[1], xx[3], xx[4], xx[2], xx[4], xx[5];
  return g;
}

/// Macenko on foreground samples given their Gram matrix V^T V.
StainMatrix macenko_core(const Eigen::MatrixX3d & v, const Eigen::Matrix3d & gram, const MacenkoParams & params)
{
  // Right singular vectors of V are the eigenvectors of V^T V.
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
  Eigen::Vector3d v1 = eig.eigenvectors().col(2);
  Eigen::Vector3d v2 = eig.eigenvectors().col(1);
  if (v1.sum() < 0.0)
  {
    v1 = -v1;
  }
  Eigen::Index imax = 0;
  v2.cwiseAbs().maxCoeff(&imax);
  if (v2[imax] < 0.0)
  {
    v2 = -v2;
  }

  const auto n = static_cast<std::ptrdiff_t>(v.rows());
  std::vector<double> phi(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
  {
    const Eigen::Vector3d od = v.row(i).transpose();
    phi[static_cast<std::size_t>(i)] = std::atan2(od.dot(v2), od.dot(v1));
  }
  const double lo = percentile(phi, params.angle_percentile);
  const double hi = percentile(std::move(phi), 100.0 - params.angle_percentile);
  if ((hi - lo) * 180.0 / kPi < kMinExtremeAngleDeg)
  {
    throw Error(Errc::DegenerateStains, "extreme stain directions are less than 1 degree apart");
  }

  auto direction = [&](double angle) {
    Eigen::Vector3d d = v1 * std::cos(angle) + v2 * std::sin(angle);
    if (d.sum() < 0.0)
    {
      d = -d;
    }
    d = d.cwiseMax(0.0);
    if (d.norm() <= 0.0)
    {
      throw Error(Errc::DegenerateStains, "stain direction has no positive OD component");
    }
    return to_vec3(d);
  };
  return order_stains(direction(lo), direction(hi));
}

/// Exact nonnegative-lasso codes for every row of V.
void code_rows(const Eigen::MatrixX3d & v, const Basis & w, double lambda, Eigen::MatrixX2d & h)
{
  const pixel::StainSystem sys(to_stain_matrix(w));
  const auto n = static_cast<std::ptrdiff_t>(v.rows());
  h.resize(v.rows(), 2);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
  {
    const auto c = pixel::solve_two_stain(sys, v(i, 0), v(i, 1), v(i, 2), lambda);
    h(i, 0) = c[0];
    h(i, 1) = c[1];
  }
}

double snmf_objective(const Eigen::MatrixX3d & v, const Basis & w, const Eigen::MatrixX2d & h, double lambda)
{
  return parallel::chunked_reduce(
    static_cast<std::size_t>(v.rows()),
    0.0,
    [&](std::size_t begin, std::size_t end) {
      double s = 0.0;
      for (std::size_t k = begin; k < end; ++k)
      {
        const auto i = static_cast<Eigen::Index>(k);
        const Eigen::Vector3d r = v.row(i).transpose() - w * h.row(i).transpose();
        s += r.squaredNorm() + lambda * (h(i, 0) + h(i, 1));
      }
      return s;
    },
    [](double a, double b) { return a + b; });
}

struct CrossProducts
{
  Eigen::Matrix2d hth = Eigen::Matrix2d::Zero();
  Basis vth = Basis::Zero();
};

CrossProducts cross_products(const Eigen::MatrixX3d & v, const Eigen::MatrixX2d & h)
{
  return parallel::chunked_reduce(
    static_cast<std::size_t>(v.rows()),
    CrossProducts{},
    [&](std::size_t begin, std::size_t end) {
      CrossProducts p;
      for (std::size_t k = begin; k < end; ++k)
      {
        const auto i = static_cast<Eigen::Index>(k);
        const Eigen::RowVector2d hr = h.row(i);
        p.hth.noalias() += hr.transpose() * hr;
        p.vth.noalias() += v.row(i).transpose() * hr;
      }
      return p;
    },
    [](CrossProducts a, const CrossProducts & b) {
      a.hth += b.hth;
      a.vth += b.vth;
      return a;
    });
}

bool project_basis(Basis & w)
{
  w = w.cwiseMax(0.0);
  for (int c = 0; c < 2; ++c)
  {
    const double n = w.col(c).norm();
    if (!(n > 0.0))
    {
      return false;
    }
    w.col(c) /= n;
  }
  return true;
}

/// Projected gradient on |V - H W^T|^2 with H fixed. With the cross products
/// precomputed the residual is a function of W alone (up to |V|^2), so every
/// trial step is O(1).
Basis update_basis(Basis w, const CrossProducts & cp)
{
  auto residual = [&](const Basis & b) { return (b * cp.hth * b.transpose()).trace() - 2.0 * (b.transpose() * cp.vth).trace(); };
  const double lipschitz = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cp.hth).eigenvalues().maxCoeff();
  if (!(lipschitz > 0.0))
  {
    return w;
  }
  double current = residual(w);
  for (int step = 0; step < kBasisSteps; ++step)
  {
    const Basis grad = 2.0 * (w * cp.hth - cp.vth);
    double t = 1.0 / lipschitz;
    bool moved = false;
    for (int bt = 0; bt < kBacktracks; ++bt, t *= 0.5)
    {
      Basis trial = w - t * grad;
      if (!project_basis(trial))
      {
        continue;
      }
      const double r = residual(trial);
      if (r < current)
      {
        w = trial;
        current = r;
        moved = true;
        break;
      }
    }
    if (!moved)
    {
      break;
    }
  }
  return w;
}

bool first_is_hematoxylin(const Vec3 & ua, const Vec3 & ub)
{
  if (std::abs(ua[2] - ub[2]) <= 1e-6)
  {
    return ua[0] >= ub[0];
  }
  return ua[2] > ub[2];
}

void order_result(SnmfResult & result, const Basis & w)
{
  result.stains = order_stains(to_vec3(w.col(0)), to_vec3(w.col(1)));
  if (!first_is_hematoxylin(to_vec3(w.col(0).normalized()), to_vec3(w.col(1).normalized())))
  {
    result.concentrations.col(0).swap(result.concentrations.col(1));
  }
}

} // namespace

void MacenkoParams::validate() const
{
  if (!(od_threshold >= 0.0) || !(angle_percentile > 0.0 && angle_percentile < 50.0) ||
      !(concentration_percentile > 50.0 && concentration_percentile <= 100.0))
  {
    throw Error(Errc::InvalidArgument, "Macenko parameters out of range");
  }
}

void SnmfParams::validate() const
{
  if (!(sparsity_lambda >= 0.0) || max_iterations < 1 || !(tolerance > 0.0))
  {
    throw Error(Errc::InvalidArgument, "SNMF parameters out of range");
  }
}

double percentile(std::vector<double> values, double p)
{
  if (values.empty())
  {
    throw Error(Errc::InvalidArgument, "percentile of an empty set");
  }
  p = std::clamp(p, 0.0, 100.0);
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size())
  {
    return a;
  }
  const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return a + frac * (b - a);
}

double percentile(std::span<const float> values, double p)
{
  return percentile(std::vector<double>(values.begin(), values.end()), p);
}

Eigen::MatrixX3d foreground_od(const PlanarImage & od, double threshold)
{
  require_od(od);
  const auto r = od.plane(0);
  const auto g = od.plane(1);
  const auto b = od.plane(2);
  std::size_t count = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
  {
    count += (r[i] >= threshold || g[i] >= threshold || b[i] >= threshold) ? 1 : 0;
  }
  Eigen::MatrixX3d v(static_cast<Eigen::Index>(count), 3);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
  {
    if (r[i] >= threshold || g[i] >= threshold || b[i] >= threshold)
    {
      v(row, 0) = r[i];
      v(row, 1) = g[i];
      v(row, 2) = b[i];
      ++row;
    }
  }
  return v;
}

StainMatrix order_stains(const Vec3 & a, const Vec3 & b)
{
  const double na = norm(a);
  const double nb = norm(b);
  if (!(na > 0.0) || !(nb > 0.0))
  {
    throw Error(Errc::DegenerateStains, "zero-length stain vector");
  }
  const Vec3 ua{ a[0] / na, a[1] / na, a[2] / na };
  const Vec3 ub{ b[0] / nb, b[1] / nb, b[2] / nb };
  return first_is_hematoxylin(ua, ub) ? StainMatrix{ { ua, ub } } : StainMatrix{ { ub, ua } };
}

StainMatrix estimate_stains_macenko(const PlanarImage & od, const MacenkoParams & params)
{
  params.validate();
  require_od(od);
  const kernels::OdGram g = kernels::omp::od_gram(planes_of(od), params.od_threshold);
  if (g.count < kMinTissuePixels)
  {
    throw Error(Errc::InsufficientTissue, std::to_string(g.count) + " foreground pixels, need " +
                                            std::to_string(kMinTissuePixels));
  }
  Eigen::Matrix3d gram;
  gram << g.xx[0], g.xx[1], g.xx[2], g.xx[1], g.xx[3], g.xx[4], g.xx[2], g.xx[4], g.xx[5];
  return macenko_core(foreground_od(od, params.od_threshold), gram, params);
}

SnmfResult snmf_factorize(const Eigen::MatrixX3d & od_pixels, const SnmfParams & params, const MacenkoParams & init)
{
  params.validate();
  init.validate();
  if (static_cast<std::size_t>(od_pixels.rows()) < kMinTissuePixels)
  {
    throw Error(Errc::InsufficientTissue, "SNMF needs at least " + std::to_string(kMinTissuePixels) + " samples");
  }

  // Optional seeded subsample for large slides.
  Eigen::MatrixX3d sampled;
  const bool subsample = params.max_samples >= kMinTissuePixels &&
                         static_cast<std::size_t>(od_pixels.rows()) > params.max_samples;
  if (subsample)
  {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(od_pixels.rows()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{ 0 });
    std::mt19937_64 rng(params.seed);
    for (std::size_t i = 0; i < params.max_samples; ++i)
    {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(params.max_samples);
    std::sort(idx.begin(), idx.end());
    sampled.resize(static_cast<Eigen::Index>(idx.size()), 3);
    for (std::size_t i = 0; i < idx.size(); ++i)
    {
      sampled.row(static_cast<Eigen::Index>(i)) = od_pixels.row(idx[i]);
    }
  }
  const Eigen::MatrixX3d & v = subsample ? sampled : od_pixels;
  const double lambda = params.sparsity_lambda;

  Basis w = to_basis(macenko_core(v, gram_of_rows(v), init));
  Eigen::MatrixX2d h;
  code_rows(v, w, lambda, h);
  double f = snmf_objective(v, w, h, lambda);

  SnmfResult result;
  result.objective.push_back(f);
  for (int it = 0; it < params.max_iterations; ++it)
  {
    const Basis w_next = update_basis(w, cross_products(v, h));
    Eigen::MatrixX2d h_next;
    code_rows(v, w_next, lambda, h_next);
    const double f_next = snmf_objective(v, w_next, h_next, lambda);
    ++result.iterations;
    if (!(f_next <= f))
    {
      // Rounding-level increase: keep the previous iterate.
      result.objective.push_back(f);
      result.converged = true;
      break;
    }
    const double rel = (f - f_next) / std::max(f, std::numeric_limits<double>::min());
    w = w_next;
    h = std::move(h_next);
    f = f_next;
    result.objective.push_back(f);
    if (rel < params.tolerance)
    {
      result.converged = true;
      break;
    }
  }

  if (subsample)
  {
    code_rows(od_pixels, w, lambda, h);
  }
  result.concentrations = std::move(h);
  order_result(result, w);
  return result;
}

StainMatrix estimate_stains_vahadane(const PlanarImage & od, const SnmfParams & params, const MacenkoParams & masking)
{
  require_od(od);
  masking.validate();
  const Eigen::MatrixX3d v = foreground_od(od, masking.od_threshold);
  if (static_cast<std::size_t>(v.rows()) < kMinTissuePixels)
  {
    throw Error(Errc::InsufficientTissue, std::to_string(v.rows()) + " foreground pixels, need " +
                                            std::to_string(kMinTissuePixels));
  }
  return snmf_factorize(v, params, masking).stains;
}

ConcentrationMap compute_concentrations(const PlanarImage & od, const StainMatrix & stains, ConcentrationSolver solver,
                                        double lambda)
{
  require_od(od);
  const Vec3 & a = stains.columns[0];
  const Vec3 & b = stains.columns[1];
  const Vec3 cross{ a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0] };
  const double scale = norm(a) * norm(b);
  if (!(scale > 0.0) || norm(cross) / scale < 1e-6)
  {
    throw Error(Errc::SingularBasis, "stain columns are parallel");
  }
  if (solver == ConcentrationSolver::SparseCoding && !(lambda >= 0.0))
  {
    throw Error(Errc::InvalidArgument, "sparse-coding lambda must be nonnegative");
  }
  ConcentrationMap conc;
  conc.width = od.width();
  conc.height = od.height();
  conc.hematoxylin.resize(od.pixel_count());
  conc.eosin.resize(od.pixel_count());
  kernels::omp::solve_concentrations(planes_of(od), stains, solver == ConcentrationSolver::SparseCoding ? lambda : 0.0,
                                     conc.hematoxylin, conc.eosin);
  return conc;
}

RgbImage reconstruct_rgb(const StainMatrix & stains, const ConcentrationMap & conc, double background_intensity,
                         std::array<double, 2> scale)
{
  const std::size_t n = conc.width * conc.height;
  if (n == 0 || conc.hematoxylin.size() != n || conc.eosin.size() != n)
  {
    throw Error(Errc::DimensionMismatch, "concentration planes do not match their declared dimensions");
  }
  PlanarImage od(conc.width, conc.height, ColorSpace::OpticalDensity);
  kernels::omp::compose_od(stains, conc.hematoxylin, conc.eosin, scale, { od.plane(0), od.plane(1), od.plane(2) });
  return od_to_rgb(od, background_intensity);
}

} // namespace stainnorm
