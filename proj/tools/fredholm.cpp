// Command-line front end: simulate scenes, apply/correct the sensor sampling
// effect, extract and upsample reference PSFs, fit distortion models, and
// compare images.
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fredholm/config.hpp"
#include "fredholm/estimate.hpp"
#include "fredholm/grid_io.hpp"
#include "fredholm/sampling.hpp"
#include "fredholm/simulate.hpp"
#include "fredholm/version.hpp"

namespace fs = std::filesystem;
using namespace fredholm;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Tracks declared outputs so a failing command leaves no partial files.
struct OutputSet {
  std::vector<fs::path> paths;
  std::uint64_t digest = 0xcbf29ce484222325ULL;
  std::optional<std::uint64_t> seed;

  void feed(std::string_view bytes) { digest = fnv1a64(bytes, digest); }
  void feed_file(const fs::path& path) { feed(slurp(path)); }

  fs::path declare(const fs::path& path) {
    paths.push_back(path);
    return path;
  }

  void cleanup() {
    for (const fs::path& path : paths) {
      std::error_code ec;
      fs::remove(path, ec);
    }
  }

  void write_manifest(const std::string& command, const fs::path& primary) {
    nlohmann::json j;
    j["command"] = command;
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(digest));
    j["config_digest"] = hex;
    j["tool_version"] = kToolVersion;
    if (seed) j["seed"] = *seed;
    std::vector<std::string> out;
    out.reserve(paths.size());
    for (const fs::path& p : paths) out.push_back(p.string());
    j["outputs"] = out;
    std::ofstream manifest(primary.string() + ".manifest");
    manifest << j.dump() << '\n';
  }
};

void write_field_outputs(const ScalarField& field, const fs::path& out,
                         OutputSet& outputs, bool png = true) {
  write_fgrid(field, outputs.declare(out));
  if (png) {
    fs::path preview = out;
    preview.replace_extension(".png");
    write_png_preview(field, outputs.declare(preview));
  }
}

fs::path cache_directory() {
  if (const char* env = std::getenv("FREDHOLM_CACHE_DIR")) return env;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME")) {
    return fs::path(xdg) / "fredholm";
  }
  if (const char* home = std::getenv("HOME")) {
    return fs::path(home) / ".cache" / "fredholm";
  }
  return fs::temp_directory_path() / "fredholm-cache";
}

// Lag profiles are cached on disk keyed by N; anything inconsistent is
// rebuilt transparently.
SamplingMatrix cached_sampling_matrix(int n) {
  const fs::path dir = cache_directory();
  const fs::path path = dir / ("R_" + std::to_string(n) + ".lags.fgrid");
  if (fs::exists(path)) {
    try {
      const ScalarField stored = read_fgrid(path);
      if (stored.height == 1 && stored.width == n) {
        SamplingMatrix r = SamplingMatrix::from_lag_profile(stored.data);
        if (std::abs(r.lag(0) - 0.872654299460603) < 1e-9) return r;
      }
    } catch (const std::exception&) {
      // fall through to rebuild
    }
  }
  SamplingMatrix r = SamplingMatrix::build(n);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!ec) {
    ScalarField lags(n, 1);
    lags.data = r.lag_profile();
    try {
      write_fgrid(lags, path);
    } catch (const std::exception&) {
      // cache is best effort
    }
  }
  return r;
}

ReferencePsf load_table_psf(const fs::path& path) {
  TabulatedPsf psf;
  psf.table = read_fgrid(path);
  const fs::path meta = path.string() + ".meta";
  psf.upsample_factor = 1;
  if (fs::exists(meta)) {
    const auto j = nlohmann::json::parse(slurp(meta));
    if (j.contains("upsample")) psf.upsample_factor = j.at("upsample").get<int>();
    if (j.contains("anchor")) {
      psf.anchor_x = j.at("anchor")[0].get<double>();
      psf.anchor_y = j.at("anchor")[1].get<double>();
    }
  }
  return psf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shift-variant field distortion toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // simulate
  std::string sim_config;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_downsample;
  std::string sim_object;
  auto* simulate = app.add_subcommand(
      "simulate", "Render a distorted observation from a scene config");
  simulate->add_option("--config", sim_config, "Scene config (JSON)")
      ->required();
  simulate->add_option("--out", sim_out, "Output FGRID path")->required();
  simulate->add_option("--seed", sim_seed, "Override the noise seed");
  simulate->add_option("--downsample", sim_downsample,
                       "Override the downsample factor");
  simulate->add_option(
      "--object", sim_object,
      "Experimental: render an extended object (FGRID) instead of the "
      "config's point sources");

  // sense / desense
  std::string io_in;
  std::string io_out;
  std::string export_r;
  auto* sense = app.add_subcommand(
      "sense", "Apply the sensor sampling effect (impulse -> sensor samples)");
  auto* desense = app.add_subcommand(
      "desense", "Correct the sensor sampling effect (sensor -> impulse)");
  for (CLI::App* cmd : {sense, desense}) {
    cmd->add_option("--in", io_in, "Input FGRID")->required();
    cmd->add_option("--out", io_out, "Output FGRID")->required();
    cmd->add_option("--export-r", export_r,
                    "Also write the dense R matrix as FGRID");
  }

  // extract-psf
  std::string psf_in;
  std::string psf_out;
  std::pair<double, double> psf_center{0.0, 0.0};
  int psf_window = 51;
  int psf_upsample = 8;
  auto* extract = app.add_subcommand(
      "extract-psf",
      "Extract the reference PSF around a source and upsample it");
  extract->add_option("--in", psf_in, "Observed image (FGRID)")->required();
  extract->add_option("--out", psf_out, "Output PSF table (FGRID)")
      ->required();
  extract->add_option("--center", psf_center,
                      "Source position `x y` (field coordinates)");
  extract->add_option("--window", psf_window, "Extraction window (pixels)");
  extract->add_option("--upsample", psf_upsample,
                      "Frequency-space upsampling factor");

  // estimate
  std::string est_config;
  std::string est_in;
  std::string est_out;
  std::string est_fit_config;
  std::string est_model = "fredholm";
  std::optional<int> est_starts;
  std::optional<std::uint64_t> est_seed;
  std::optional<int> est_downsample;
  std::string est_psf_table;
  auto* estimate = app.add_subcommand(
      "estimate", "Fit distortion parameters to an observed image");
  estimate->add_option("--config", est_config, "Scene config (JSON)")
      ->required();
  estimate->add_option("--in", est_in, "Observed image (FGRID)")->required();
  estimate->add_option("--out", est_out, "Fit report path (JSON)")->required();
  estimate->add_option("--fit", est_fit_config, "Fit options (JSON)");
  estimate->add_option("--model", est_model, "fredholm | pinhole");
  estimate->add_option("--starts", est_starts, "Multi-start count");
  estimate->add_option("--seed", est_seed, "Multi-start seed");
  estimate->add_option("--downsample", est_downsample,
                       "Model downsample factor");
  estimate->add_option("--psf", est_psf_table,
                       "Use an extracted PSF table (FGRID + .meta sidecar) "
                       "instead of the config's PSF");

  // compare
  std::string cmp_a;
  std::string cmp_b;
  std::string cmp_out;
  auto* compare = app.add_subcommand(
      "compare", "Residue and statistics between two images");
  compare->add_option("--a", cmp_a, "First FGRID")->required();
  compare->add_option("--b", cmp_b, "Second FGRID")->required();
  compare->add_option("--out", cmp_out, "Statistics path (JSON)")->required();

  // export
  std::string exp_in;
  std::string exp_png;
  std::string exp_csv;
  auto* exporter = app.add_subcommand(
      "export", "Convert an FGRID to PNG preview and/or CSV");
  exporter->add_option("--in", exp_in, "Input FGRID")->required();
  exporter->add_option("--png", exp_png, "PNG preview path");
  exporter->add_option("--csv", exp_csv, "CSV path");

  CLI11_PARSE(app, argc, argv);

  OutputSet outputs;
  try {
    if (simulate->parsed()) {
      const std::string config_text = slurp(sim_config);
      outputs.feed(config_text);
      SceneConfig config =
          parse_scene_config(config_text, fs::path(sim_config).parent_path());
      if (sim_seed) config.noise.seed = *sim_seed;
      if (sim_downsample) config.downsample = *sim_downsample;
      outputs.seed = config.noise.seed;

      ScalarField image;
      if (!sim_object.empty()) {
        outputs.feed_file(sim_object);
        image = render_extended(read_fgrid(sim_object), config.psf,
                                config.distortion);
      } else {
        image = render_fredholm(config.scene, config.psf, config.distortion);
      }
      if (config.noise.lambda > 0.0) {
        image = add_poisson_noise(image, config.noise);
      }
      if (config.downsample > 1) {
        image = block_downsample(image, config.downsample);
      }
      write_field_outputs(image, sim_out, outputs);
      outputs.write_manifest("simulate", sim_out);
    } else if (sense->parsed() || desense->parsed()) {
      outputs.feed_file(io_in);
      const ScalarField input = read_fgrid(io_in);
      const SamplingMatrix rows = cached_sampling_matrix(input.height);
      const SamplingMatrix cols = input.width == input.height
                                      ? rows
                                      : cached_sampling_matrix(input.width);
      const ScalarField result = sense->parsed()
                                     ? sensor_sample(input, rows, cols)
                                     : correct_sampling(input, rows, cols);
      write_field_outputs(result, io_out, outputs);
      if (!export_r.empty()) {
        write_fgrid(rows.to_field(), outputs.declare(export_r));
      }
      outputs.write_manifest(sense->parsed() ? "sense" : "desense", io_out);
    } else if (extract->parsed()) {
      outputs.feed_file(psf_in);
      const ScalarField image = read_fgrid(psf_in);
      const ScalarField crop = extract_reference_psf(
          image, psf_center.first, psf_center.second, psf_window);
      const ScalarField fine = upsample_psf_frequency(crop, psf_upsample);
      write_field_outputs(fine, psf_out, outputs);
      nlohmann::json meta;
      meta["upsample"] = psf_upsample;
      meta["anchor"] = {psf_center.first, psf_center.second};
      meta["window"] = crop.width;
      std::ofstream sidecar(outputs.declare(psf_out + ".meta").string());
      sidecar << meta.dump() << '\n';
      outputs.write_manifest("extract-psf", psf_out);
    } else if (estimate->parsed()) {
      const std::string config_text = slurp(est_config);
      outputs.feed(config_text);
      outputs.feed_file(est_in);
      const SceneConfig config =
          parse_scene_config(config_text, fs::path(est_config).parent_path());
      const ScalarField observed = read_fgrid(est_in);

      FitOptions options;
      if (!est_fit_config.empty()) {
        const std::string fit_text = slurp(est_fit_config);
        outputs.feed(fit_text);
        options = parse_fit_options(fit_text);
      }
      if (est_model == "pinhole") {
        options.model = FitModel::pinhole;
      } else if (est_model != "fredholm") {
        throw ConfigError("--model must be fredholm or pinhole");
      }
      if (est_starts) options.starts = *est_starts;
      if (est_seed) options.seed = *est_seed;
      if (est_downsample) {
        options.downsample = *est_downsample;
      } else if (options.downsample == 1 && config.downsample > 1) {
        options.downsample = config.downsample;
      }
      outputs.seed = options.seed;

      ReferencePsf psf = config.psf;
      if (!est_psf_table.empty()) {
        outputs.feed_file(est_psf_table);
        psf = load_table_psf(est_psf_table);
      }
      const FitReport report = fit(observed, config.scene, psf, options);

      fs::path residue_path = est_out;
      residue_path.replace_extension(".residue.fgrid");
      write_field_outputs(report.residue, residue_path, outputs);
      const std::string text =
          fit_report_to_json(report, residue_path.string());
      std::ofstream out(outputs.declare(est_out).string());
      out << text << '\n';
      std::cout << text << '\n';
      outputs.write_manifest("estimate", est_out);
    } else if (compare->parsed()) {
      outputs.feed_file(cmp_a);
      outputs.feed_file(cmp_b);
      const ScalarField a = read_fgrid(cmp_a);
      const ScalarField b = read_fgrid(cmp_b);
      if (a.width != b.width || a.height != b.height) {
        throw std::invalid_argument("compare: image dimensions differ");
      }
      ScalarField residue = a;
      double value = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        residue.data[k] = a.data[k] - b.data[k];
        value += residue.data[k] * residue.data[k];
      }
      const double lambda_hat = estimate_lambda(a, b);
      nlohmann::json j;
      j["value"] = value;
      j["lambda_hat"] = lambda_hat;
      if (lambda_hat > 0.0) {
        j["chi2"] = chi_squared(a, b, lambda_hat);
      } else {
        j["chi2"] = nullptr;
      }
      fs::path residue_path = cmp_out;
      residue_path.replace_extension(".residue.fgrid");
      write_field_outputs(residue, residue_path, outputs);
      std::ofstream out(outputs.declare(cmp_out).string());
      out << j.dump(2) << '\n';
      std::cout << j.dump(2) << '\n';
      outputs.write_manifest("compare", cmp_out);
    } else if (exporter->parsed()) {
      const ScalarField field = read_fgrid(exp_in);
      if (exp_png.empty() && exp_csv.empty()) {
        throw std::invalid_argument("export: pass --png and/or --csv");
      }
      if (!exp_png.empty()) write_png_preview(field, exp_png);
      if (!exp_csv.empty()) write_csv(field, exp_csv);
    }
  } catch (const std::exception& e) {
    outputs.cleanup();
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
