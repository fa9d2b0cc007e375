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

#include "commands.hpp"

#include "stainnorm/cohort.hpp"
#include "stainnorm/metrics.hpp"
#include "stainnorm/raster_io.hpp"
#include "stainnorm/serialize.hpp"
#include "stainnorm/version.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace stainnorm::cli
{

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace
{

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start)
{
  const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return std::round(ms * 1000.0) / 1000.0;
}

struct ImageRecord
{
  std::string id;
  std::string input;
  std::string output;
  std::string status = "ok";
  std::string message;
  std::vector<std::string> warnings;
  ojson timings_ms = ojson::object();

  bool failed() const { return status == "error"; }

  void fail(const std::string & what)
  {
    status = "error";
    message = what;
  }

  void finish()
  {
    if (!failed() && !warnings.empty())
    {
      status = "warning";
    }
  }
};

std::string solver_name(ConcentrationSolver s)
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
  throw ConfigError("unknown solver '" + s + "' (expected sparse or nnls)");
}

Method parse_method_or_throw(const std::string & s)
{
  try
  {
    return parse_method(s);
  }
  catch (const Error & e)
  {
    throw ConfigError(e.what());
  }
}

ojson config_snapshot(const RunConfig & c)
{
  ojson j;
  j["method"] = std::string(to_string(c.method));
  j["reference"] = c.reference.generic_string();
  j["input"] = c.input.generic_string();
  j["output"] = c.output.generic_string();
  j["normalized"] = c.normalized.generic_string();
  j["bins"] = c.bins;
  j["tile_size"] = c.tile_size;
  j["downsample"] = c.downsample;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["k"] = c.k;
  j["solver"] = solver_name(c.vahadane_solver);
  j["ssim"] = c.ssim;
  return j;
}

void validate_numbers(const RunConfig & c)
{
  if (c.bins < 2)
  {
    throw ConfigError("--bins must be at least 2");
  }
  if (c.tile_size < 1)
  {
    throw ConfigError("--tile-size must be at least 1");
  }
  if (c.downsample < 1)
  {
    throw ConfigError("--downsample must be at least 1");
  }
  if (c.k < 1)
  {
    throw ConfigError("--k must be at least 1");
  }
}

void require_file(const fs::path & p, const char * flag)
{
  if (p.empty())
  {
    throw ConfigError(std::string(flag) + " is required");
  }
  if (!fs::is_regular_file(p))
  {
    throw ConfigError(std::string(flag) + " '" + p.string() + "' is not a file");
  }
}

void require_dir(const fs::path & p, const char * flag)
{
  if (p.empty())
  {
    throw ConfigError(std::string(flag) + " is required");
  }
  if (!fs::is_directory(p))
  {
    throw ConfigError(std::string(flag) + " '" + p.string() + "' is not a directory");
  }
}

void prepare_output(const fs::path & p)
{
  if (p.empty())
  {
    throw ConfigError("--output is required");
  }
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p))
  {
    throw ConfigError("cannot create output directory '" + p.string() + "'");
  }
}

RgbImage load_working(const fs::path & p, std::size_t factor)
{
  return downsample(load_image(p), factor);
}

RgbImage load_reference(const RunConfig & c)
{
  try
  {
    return load_working(c.reference, c.downsample);
  }
  catch (const Error & e)
  {
    throw ConfigError("reference: " + std::string(e.what()));
  }
}

int thread_count(const RunConfig & c)
{
  return c.workers == 0 ? omp_get_max_threads() : static_cast<int>(c.workers);
}

/// Runs body(i) for every image index on `workers` threads. Results are
/// stored by index so scheduling never affects output order.
void for_each_image(const RunConfig & c, std::vector<ImageRecord> & records,
                    const std::function<void(std::size_t, ImageRecord &)> & body)
{
  const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count(c))
  for (std::ptrdiff_t i = 0; i < n; ++i)
  {
    ImageRecord & rec = records[static_cast<std::size_t>(i)];
    try
    {
      body(static_cast<std::size_t>(i), rec);
    }
    catch (const std::exception & e)
    {
      rec.fail(e.what());
    }
    rec.finish();
  }
}

std::vector<ImageRecord> records_for(const std::vector<fs::path> & paths)
{
  std::vector<ImageRecord> records(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i)
  {
    records[i].id = paths[i].stem().string();
    records[i].input = paths[i].generic_string();
  }
  return records;
}

void write_text(const fs::path & p, const std::string & text)
{
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
  f.close();
  if (!f)
  {
    throw Error(Errc::IoError, "cannot write '" + p.string() + "'");
  }
}

std::size_t count_errors(const std::vector<ImageRecord> & records)
{
  return static_cast<std::size_t>(
    std::count_if(records.begin(), records.end(), [](const ImageRecord & r) { return r.failed(); }));
}

void write_manifest(const RunConfig & c, std::string_view command, const std::vector<ImageRecord> & records,
                    const ojson & stage_timings, const std::vector<std::string> & warnings = {})
{
  ojson j;
  j["tool"] = "stainnorm";
  j["version"] = std::string(kVersion);
  j["command"] = std::string(command);
  j["config"] = config_snapshot(c);
  std::size_t ok = 0;
  std::size_t warned = 0;
  ojson images = ojson::array();
  for (const auto & r : records)
  {
    ok += r.status == "ok";
    warned += r.status == "warning";
    ojson e;
    e["id"] = r.id;
    e["input"] = r.input;
    e["output"] = r.output;
    e["status"] = r.status;
    e["message"] = r.message;
    e["warnings"] = r.warnings;
    e["timings_ms"] = r.timings_ms;
    images.push_back(std::move(e));
  }
  j["images"] = std::move(images);
  j["summary"] = { { "ok", ok }, { "warning", warned }, { "error", count_errors(records) } };
  j["warnings"] = warnings;
  j["timings_ms"] = stage_timings;
  write_text(c.output / "manifest.json", j.dump(2) + "\n");
}

void report_errors(const std::vector<ImageRecord> & records, std::ostream & err)
{
  for (const auto & r : records)
  {
    if (r.failed())
    {
      err << "error: " << r.input << ": " << r.message << "\n";
    }
  }
}

int finish(const std::vector<ImageRecord> & records, std::ostream & err)
{
  report_errors(records, err);
  return count_errors(records) == 0 ? kExitOk : kExitImageErrors;
}

/// mean and population std of the finite entries; NaN when there are none.
std::pair<double, double> mean_std(const std::vector<double> & values)
{
  std::vector<double> v;
  std::copy_if(values.begin(), values.end(), std::back_inserter(v), [](double x) { return std::isfinite(x); });
  if (v.empty())
  {
    return { std::nan(""), std::nan("") };
  }
  double sum = 0.0;
  for (double x : v)
  {
    sum += x;
  }
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v)
  {
    ss += (x - mean) * (x - mean);
  }
  return { mean, std::sqrt(ss / static_cast<double>(v.size())) };
}

} // namespace

void apply_config_json(const std::string & text, RunConfig & c)
{
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(text);
  }
  catch (const nlohmann::json::exception & e)
  {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object())
  {
    throw ConfigError("config must be a JSON object");
  }
  for (const auto & [key, value] : j.items())
  {
    try
    {
      if (key == "method")
      {
        c.method = parse_method_or_throw(value.get<std::string>());
      }
      else if (key == "reference")
      {
        c.reference = value.get<std::string>();
      }
      else if (key == "input")
      {
        c.input = value.get<std::string>();
      }
      else if (key == "output")
      {
        c.output = value.get<std::string>();
      }
      else if (key == "normalized")
      {
        c.normalized = value.get<std::string>();
      }
      else if (key == "bins")
      {
        c.bins = value.get<std::size_t>();
      }
      else if (key == "tile_size")
      {
        c.tile_size = value.get<std::size_t>();
      }
      else if (key == "downsample")
      {
        c.downsample = value.get<std::size_t>();
      }
      else if (key == "seed")
      {
        c.seed = value.get<std::uint64_t>();
      }
      else if (key == "workers")
      {
        c.workers = value.get<std::size_t>();
      }
      else if (key == "k")
      {
        c.k = value.get<int>();
      }
      else if (key == "solver")
      {
        c.vahadane_solver = parse_solver(value.get<std::string>());
      }
      else if (key == "ssim")
      {
        c.ssim = value.get<bool>();
      }
      else
      {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
    catch (const nlohmann::json::exception & e)
    {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

std::vector<fs::path> list_images(const fs::path & dir)
{
  static const std::set<std::string> extensions{ ".png", ".tif", ".tiff" };
  std::vector<fs::path> out;
  for (const auto & entry : fs::directory_iterator(dir))
  {
    const std::string name = entry.path().filename().string();
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (entry.is_regular_file() && !name.starts_with(".") && extensions.count(ext))
    {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end(), [](const fs::path & a, const fs::path & b) { return a.filename() < b.filename(); });
  return out;
}

int cmd_normalize(const RunConfig & c, std::ostream & out, std::ostream & err)
{
  validate_numbers(c);
  require_file(c.reference, "--reference");
  require_dir(c.input, "--input");
  const auto inputs = list_images(c.input);
  if (inputs.empty())
  {
    throw ConfigError("--input '" + c.input.string() + "' contains no PNG or TIFF images");
  }
  prepare_output(c.output);

  const auto t_fit = Clock::now();
  const RgbImage reference = load_reference(c);
  NormalizerOptions options;
  options.vahadane_solver = c.vahadane_solver;
  options.snmf.seed = c.seed;
  NormalizerModel model;
  try
  {
    model = fit(c.method, reference, options);
  }
  catch (const Error & e)
  {
    throw ConfigError("fitting the reference failed: " + std::string(e.what()));
  }
  ojson stage;
  stage["fit"] = elapsed_ms(t_fit);
  write_text(c.output / "model.json", nlohmann::json(to_json(model)).dump(2) + "\n");

  auto records = records_for(inputs);
  std::set<std::string> seen;
  for (auto & r : records)
  {
    r.output = (c.output / (r.id + ".png")).generic_string();
    if (!seen.insert(r.id).second)
    {
      r.fail(to_string(Errc::InvalidArgument).data() + std::string(": output name '") + r.id +
             ".png' already used by another input");
    }
  }

  const auto t_batch = Clock::now();
  for_each_image(c, records, [&](std::size_t i, ImageRecord & rec) {
    if (rec.failed())
    {
      return;
    }
    auto t = Clock::now();
    const RgbImage source = load_working(inputs[i], c.downsample);
    rec.timings_ms["load"] = elapsed_ms(t);

    t = Clock::now();
    SourceAnalysis analysis = analyze_source(model, source);
    rec.warnings = analysis.warnings;
    rec.timings_ms["analyze"] = elapsed_ms(t);

    t = Clock::now();
    TileGrid grid = tile_image(source, c.tile_size);
    for (auto & tile : grid.tiles)
    {
      tile.image = apply_normalization(model, analysis, tile.image);
    }
    const RgbImage result = stitch_tiles(grid);
    rec.timings_ms["apply"] = elapsed_ms(t);

    t = Clock::now();
    save_image(result, rec.output);
    rec.timings_ms["save"] = elapsed_ms(t);
  });
  stage["transform"] = elapsed_ms(t_batch);

  write_manifest(c, "normalize", records, stage);
  out << "normalized " << (records.size() - count_errors(records)) << " of " << records.size() << " images\n";
  return finish(records, err);
}

int cmd_evaluate(const RunConfig & c, std::ostream & out, std::ostream & err)
{
  validate_numbers(c);
  require_file(c.reference, "--reference");
  require_dir(c.normalized, "--normalized");
  require_dir(c.input, "--input");
  prepare_output(c.output);

  const auto normalized = list_images(c.normalized);
  std::map<std::string, fs::path> originals;
  for (const auto & p : list_images(c.input))
  {
    originals.emplace(p.stem().string(), p);
  }

  ojson stage;
  std::vector<std::string> warnings;
  const std::string method(to_string(c.method));
  std::string csv = metrics_csv_header() + "\n";
  auto records = records_for(normalized);

  if (normalized.empty())
  {
    warnings.push_back("--normalized '" + c.normalized.string() + "' contains no images; report is empty");
    err << "warning: " << warnings.back() << "\n";
  }
  else
  {
    auto t = Clock::now();
    const auto ref_hist = lab_histograms(load_reference(c), c.bins);
    stage["reference"] = elapsed_ms(t);

    std::vector<MetricReport> reports(normalized.size());
    t = Clock::now();
    for_each_image(c, records, [&](std::size_t i, ImageRecord & rec) {
      const auto found = originals.find(rec.id);
      if (found == originals.end())
      {
        throw Error(Errc::MissingCounterpart, "no original named '" + rec.id + "' in " + c.input.string());
      }
      auto t0 = Clock::now();
      const RgbImage norm = load_image(normalized[i]);
      const RgbImage orig = load_working(found->second, c.downsample);
      rec.timings_ms["load"] = elapsed_ms(t0);

      t0 = Clock::now();
      MetricReport r;
      if (c.ssim)
      {
        r = evaluate_pair(norm, ref_hist, orig);
      }
      else
      {
        r.histogram = histogram_metrics(lab_histograms(norm, c.bins), ref_hist);
        r.ssim = std::nan("");
        r.red_blue_ratio = red_blue_ratio(norm);
      }
      r.image_id = rec.id;
      r.method = method;
      rec.warnings = r.histogram.warnings;
      rec.timings_ms["metrics"] = elapsed_ms(t0);
      reports[i] = std::move(r);
    });
    stage["metrics"] = elapsed_ms(t);

    std::array<std::vector<double>, 6> columns;
    for (std::size_t i = 0; i < reports.size(); ++i)
    {
      if (records[i].failed())
      {
        continue;
      }
      const auto & r = reports[i];
      csv += metrics_csv_row(r) + "\n";
      columns[0].push_back(r.histogram.intersection);
      columns[1].push_back(r.histogram.pcc.value_or(std::nan("")));
      columns[2].push_back(r.histogram.euclidean);
      columns[3].push_back(r.histogram.js_divergence);
      columns[4].push_back(r.ssim);
      columns[5].push_back(r.red_blue_ratio);
    }
    if (!columns[0].empty())
    {
      std::string mean_row = "mean," + csv_field(method);
      std::string std_row = "std," + csv_field(method);
      for (const auto & col : columns)
      {
        const auto [m, s] = mean_std(col);
        mean_row += "," + format_fixed(m);
        std_row += "," + format_fixed(s);
      }
      csv += mean_row + "\n" + std_row + "\n";
    }
  }

  write_text(c.output / "metrics.csv", csv);
  write_manifest(c, "evaluate", records, stage, warnings);
  out << "evaluated " << (records.size() - count_errors(records)) << " of " << records.size() << " images\n";
  return finish(records, err);
}

int cmd_select_reference(const RunConfig & c, std::ostream & out, std::ostream & err)
{
  validate_numbers(c);
  require_dir(c.input, "--input");
  const auto inputs = list_images(c.input);
  if (inputs.empty())
  {
    throw ConfigError(std::string(to_string(Errc::EmptyCohort)) + ": --input '" + c.input.string() +
                      "' contains no PNG or TIFF images");
  }
  prepare_output(c.output);

  auto records = records_for(inputs);
  std::vector<double> ratios(inputs.size(), 0.0);
  const auto t = Clock::now();
  for_each_image(c, records, [&](std::size_t i, ImageRecord & rec) {
    const auto t0 = Clock::now();
    ratios[i] = red_blue_ratio(load_working(inputs[i], c.downsample));
    rec.timings_ms["ratio"] = elapsed_ms(t0);
  });
  ojson stage;
  stage["ratios"] = elapsed_ms(t);

  std::vector<std::pair<std::string, double>> table;
  std::string csv = "image_id,red_blue_ratio\n";
  for (std::size_t i = 0; i < records.size(); ++i)
  {
    if (!records[i].failed())
    {
      table.emplace_back(records[i].id, ratios[i]);
      csv += csv_field(records[i].id) + "," + format_fixed(ratios[i]) + "\n";
    }
  }
  write_text(c.output / "ratios.csv", csv);

  std::vector<std::string> warnings;
  if (table.empty())
  {
    warnings.push_back(std::string(to_string(Errc::EmptyCohort)) + ": no decodable images");
    err << "error: " << warnings.back() << "\n";
  }
  else
  {
    const std::string winner = select_reference(table);
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto & p) { return p.first == winner; });
    out << winner << "," << format_fixed(it->second) << "\n";
  }
  write_manifest(c, "select-reference", records, stage, warnings);
  const int code = finish(records, err);
  return table.empty() ? kExitImageErrors : code;
}

int cmd_cluster(const RunConfig & c, std::ostream & out, std::ostream & err)
{
  validate_numbers(c);
  require_dir(c.input, "--input");
  const auto inputs = list_images(c.input);
  if (inputs.empty())
  {
    throw ConfigError(std::string(to_string(Errc::EmptyCohort)) + ": --input '" + c.input.string() +
                      "' contains no PNG or TIFF images");
  }
  prepare_output(c.output);

  auto records = records_for(inputs);
  std::vector<FeatureVector> features(inputs.size());
  auto t = Clock::now();
  for_each_image(c, records, [&](std::size_t i, ImageRecord & rec) {
    const auto t0 = Clock::now();
    features[i] = histogram_features(load_working(inputs[i], c.downsample), c.bins, rec.id);
    rec.timings_ms["features"] = elapsed_ms(t0);
  });
  ojson stage;
  stage["features"] = elapsed_ms(t);

  std::vector<FeatureVector> usable;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < records.size(); ++i)
  {
    if (!records[i].failed())
    {
      usable.push_back(std::move(features[i]));
      ids.push_back(records[i].id);
    }
  }

  std::vector<std::string> warnings;
  const auto n = static_cast<int>(usable.size());
  if (n < c.k)
  {
    warnings.push_back(std::string(to_string(Errc::KTooLarge)) + ": k = " + std::to_string(c.k) + " but only " +
                       std::to_string(n) + " decodable images");
    err << "error: " << warnings.back() << "\n";
    write_manifest(c, "cluster", records, stage, warnings);
    report_errors(records, err);
    return kExitImageErrors;
  }

  t = Clock::now();
  Eigen::MatrixXd projected = Eigen::MatrixXd::Zero(n, 2);
  if (n >= 2)
  {
    projected = pca_fit_project(usable, 2).projected;
  }
  const ClusterModel model = kmeans_cluster(projected, c.k, c.seed);
  std::vector<int> k_range;
  for (int k = 1; k <= std::min(n, std::max(c.k, 10)); ++k)
  {
    k_range.push_back(k);
  }
  const auto curve = wcss_curve(projected, k_range, c.seed);
  const auto reps = choose_representatives(model, projected, ids);
  stage["cluster"] = elapsed_ms(t);

  write_text(c.output / "clusters.json", cluster_json(model, ids, reps, curve).dump(2) + "\n");
  write_text(c.output / "projection.csv", projection_csv(ids, projected));
  write_manifest(c, "cluster", records, stage, warnings);
  for (const auto & id : reps)
  {
    out << id << "\n";
  }
  return finish(records, err);
}

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  CLI::App app{ "H&E stain normalisation toolkit", "stainnorm" };
  app.require_subcommand(1);

  std::string method = "histmatch";
  std::string reference;
  std::string input;
  std::string output;
  std::string normalized;
  std::size_t bins = 256;
  std::size_t tile_size = 512;
  std::size_t downsample_factor = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  int k = kDefaultClusters;
  std::string solver = "sparse";
  bool no_ssim = false;
  std::string config_file;

  // Each flag that was given on the command line overrides the config file.
  std::vector<std::pair<CLI::Option *, std::function<void(RunConfig &)>>> overrides;
  std::vector<CLI::Option *> config_options;

  auto add_common = [&](CLI::App * sub) {
    auto add = [&](CLI::Option * opt, std::function<void(RunConfig &)> apply) {
      overrides.emplace_back(opt, std::move(apply));
    };
    add(sub->add_option("--method", method, "histmatch, reinhard, macenko or vahadane"),
        [&](RunConfig & c) { c.method = parse_method_or_throw(method); });
    add(sub->add_option("--reference", reference, "reference image"), [&](RunConfig & c) { c.reference = reference; });
    add(sub->add_option("--input", input, "input (original) image directory"),
        [&](RunConfig & c) { c.input = input; });
    add(sub->add_option("--output", output, "output directory"), [&](RunConfig & c) { c.output = output; });
    add(sub->add_option("--normalized", normalized, "normalised image directory (evaluate)"),
        [&](RunConfig & c) { c.normalized = normalized; });
    add(sub->add_option("--bins", bins, "histogram bins per channel (default 256)"),
        [&](RunConfig & c) { c.bins = bins; });
    add(sub->add_option("--tile-size", tile_size, "tile edge in pixels (default 512)"),
        [&](RunConfig & c) { c.tile_size = tile_size; });
    add(sub->add_option("--downsample", downsample_factor, "integer downsampling factor (default 1)"),
        [&](RunConfig & c) { c.downsample = downsample_factor; });
    add(sub->add_option("--seed", seed, "random seed (default 0)"), [&](RunConfig & c) { c.seed = seed; });
    add(sub->add_option("--workers", workers, "images processed concurrently (default: all threads)"),
        [&](RunConfig & c) { c.workers = workers; });
    add(sub->add_option("--k", k, "cluster count (default 8)"), [&](RunConfig & c) { c.k = k; });
    add(sub->add_option("--solver", solver, "Vahadane concentration solver: sparse or nnls"),
        [&](RunConfig & c) { c.vahadane_solver = parse_solver(solver); });
    add(sub->add_flag("--no-ssim", no_ssim, "skip SSIM in evaluate"), [&](RunConfig & c) { c.ssim = !no_ssim; });
    config_options.push_back(sub->add_option("--config", config_file, "JSON config file; flags override it"));
  };

  auto * normalize = app.add_subcommand("normalize", "normalise every image of --input against --reference");
  auto * evaluate = app.add_subcommand("evaluate", "score --normalized images against --reference and --input");
  auto * select = app.add_subcommand("select-reference", "pick the image with red/blue ratio closest to one");
  auto * cluster = app.add_subcommand("cluster", "cluster lαβ histogram features and pick representatives");
  auto * version = app.add_subcommand("version", "print the version");
  for (auto * sub : { normalize, evaluate, select, cluster })
  {
    add_common(sub);
  }

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError & e)
  {
    std::ostringstream o;
    std::ostringstream e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (version->parsed())
  {
    out << "stainnorm " << kVersion << "\n";
    return kExitOk;
  }

  try
  {
    RunConfig config;
    if (!config_file.empty())
    {
      std::ifstream f(config_file, std::ios::binary);
      if (!f)
      {
        throw ConfigError("cannot read config file '" + config_file + "'");
      }
      std::stringstream buf;
      buf << f.rdbuf();
      apply_config_json(buf.str(), config);
    }
    for (auto & [opt, apply] : overrides)
    {
      if (opt->count() > 0)
      {
        apply(config);
      }
    }
    if (normalize->parsed())
    {
      return cmd_normalize(config, out, err);
    }
    if (evaluate->parsed())
    {
      return cmd_evaluate(config, out, err);
    }
    if (select->parsed())
    {
      return cmd_select_reference(config, out, err);
    }
    return cmd_cluster(config, out, err);
  }
  catch (const ConfigError & e)
  {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  catch (const Error & e)
  {
    err << "error: " << e.what() << "\n";
    return kExitImageErrors;
  }
  catch (const std::filesystem::filesystem_error & e)
  {
    err << "error: " << e.what() << "\n";
    return kExitImageErrors;
  }
}

} // namespace stainnorm::cli
