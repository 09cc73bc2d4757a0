#include "fredholm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "fredholm/grid_io.hpp"

namespace fredholm {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) {
  throw ConfigError("scene config: " + message);
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError(where + ": unknown field \"" + key + "\"");
    }
  }
}

double number_at(const json& j, const std::string& key,
                 const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing \"" + key + "\"");
  if (!j.at(key).is_number()) {
    throw ConfigError(where + ": \"" + key + "\" must be a number");
  }
  return j.at(key).get<double>();
}

std::vector<MonomialTerm> parse_terms(const json& arr,
                                      const std::string& where) {
  if (!arr.is_array()) throw ConfigError(where + " must be an array");
  std::vector<MonomialTerm> terms;
  terms.reserve(arr.size());
  for (std::size_t idx = 0; idx < arr.size(); ++idx) {
    const json& t = arr[idx];
    const std::string at = where + "[" + std::to_string(idx) + "]";
    reject_unknown(t, {"i", "j", "m", "n", "c"}, at);
    MonomialTerm term;
    term.i = static_cast<int>(number_at(t, "i", at));
    term.j = static_cast<int>(number_at(t, "j", at));
    term.m = static_cast<int>(number_at(t, "m", at));
    term.n = static_cast<int>(number_at(t, "n", at));
    term.coefficient = number_at(t, "c", at);
    if (term.i < 0 || term.j < 0 || term.m < 0 || term.n < 0) {
      throw ConfigError(at + ": exponents must be >= 0");
    }
    terms.push_back(term);
  }
  return terms;
}

DistortionSpec parse_distortion_block(const json& d) {
  const std::string where = "distortion";
  reject_unknown(d, {"none", "theta", "f_terms", "g_terms", "logarithmic",
                     "reference_point"},
                 where);
  if (d.contains("none")) return NoDistortion{};
  if (d.contains("logarithmic")) {
    const json& l = d.at("logarithmic");
    reject_unknown(l, {"cf", "cg", "scale"}, "distortion.logarithmic");
    LogarithmicDistortion log_spec;
    log_spec.cf = l.contains("cf") ? number_at(l, "cf", where) : 1.0;
    log_spec.cg = l.contains("cg") ? number_at(l, "cg", where) : 1.0;
    log_spec.scale = number_at(l, "scale", "distortion.logarithmic");
    if (!(log_spec.scale >= 0.0)) {
      throw ConfigError("distortion.logarithmic: scale must be >= 0");
    }
    return log_spec;
  }
  DistortionPolynomial poly;
  if (d.contains("theta")) {
    const json& t = d.at("theta");
    if (!t.is_array() || t.size() != 12) {
      throw ConfigError("distortion.theta must hold exactly 12 numbers");
    }
    ThetaVector theta;
    for (int k = 0; k < 12; ++k) theta.theta[k] = t[k].get<double>();
    poly = theta_to_polynomial(theta);
  } else if (d.contains("f_terms") || d.contains("g_terms")) {
    if (d.contains("f_terms")) {
      poly.f_terms = parse_terms(d.at("f_terms"), "distortion.f_terms");
    }
    if (d.contains("g_terms")) {
      poly.g_terms = parse_terms(d.at("g_terms"), "distortion.g_terms");
    }
  } else {
    return NoDistortion{};
  }
  if (d.contains("reference_point")) {
    const json& rp = d.at("reference_point");
    if (!rp.is_array() || rp.size() != 2) {
      throw ConfigError("distortion.reference_point must be [x0, y0]");
    }
    poly.x0 = rp[0].get<double>();
    poly.y0 = rp[1].get<double>();
  }
  const DfcReport report = validate_dfc(poly);
  if (!report.ok()) {
    std::string detail;
    for (const DfcViolation& v : report.violations) {
      detail += std::string(detail.empty() ? "" : ", ") + v.function + "[" +
                std::to_string(v.index) + "] x^" + std::to_string(v.term.i) +
                " y^" + std::to_string(v.term.j);
    }
    throw ConfigError(
        "distortion violates the distortion-free condition (terms need "
        "i + j >= 1): " +
        detail);
  }
  return poly;
}

ReferencePsf parse_psf_block(const json& p,
                             const std::filesystem::path& base_dir) {
  reject_unknown(p, {"gaussian", "table"}, "psf");
  if (p.contains("gaussian")) {
    const json& g = p.at("gaussian");
    reject_unknown(g, {"sigma"}, "psf.gaussian");
    GaussianPsf psf;
    psf.sigma = number_at(g, "sigma", "psf.gaussian");
    if (!(psf.sigma > 0.0)) fail("psf.gaussian.sigma must be > 0");
    return psf;
  }
  if (p.contains("table")) {
    const json& t = p.at("table");
    reject_unknown(t, {"path", "upsample", "anchor"}, "psf.table");
    if (!t.contains("path")) fail("psf.table: missing \"path\"");
    std::filesystem::path path = t.at("path").get<std::string>();
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    TabulatedPsf psf;
    try {
      psf.table = read_fgrid(path);
    } catch (const std::exception& e) {
      fail(std::string("psf.table: ") + e.what());
    }
    psf.upsample_factor = 1;
    // Sidecar metadata written by extract-psf records the upsample factor.
    const std::filesystem::path meta = path.string() + ".meta";
    if (std::filesystem::exists(meta)) {
      std::ifstream in(meta);
      json m = json::parse(in, nullptr, true, true);
      if (m.contains("upsample")) psf.upsample_factor = m.at("upsample").get<int>();
      if (m.contains("anchor")) {
        psf.anchor_x = m.at("anchor")[0].get<double>();
        psf.anchor_y = m.at("anchor")[1].get<double>();
      }
    }
    if (t.contains("upsample")) {
      psf.upsample_factor = static_cast<int>(number_at(t, "upsample", "psf.table"));
    }
    if (t.contains("anchor")) {
      psf.anchor_x = t.at("anchor")[0].get<double>();
      psf.anchor_y = t.at("anchor")[1].get<double>();
    }
    if (psf.upsample_factor < 1) fail("psf.table.upsample must be >= 1");
    return psf;
  }
  fail("psf block must contain \"gaussian\" or \"table\"");
}

}  // namespace

SceneConfig parse_scene_config(const std::string& json_text,
                               const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, true);
  } catch (const std::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"canvas", "sources", "source_grid", "psf", "distortion",
                  "noise", "downsample"},
                 "scene config");

  SceneConfig config;
  if (!j.contains("canvas")) fail("missing \"canvas\" block");
  const json& canvas = j.at("canvas");
  if (!canvas.is_array() || canvas.size() != 2) {
    fail("\"canvas\" must be [width, height]");
  }
  config.scene.canvas_width = canvas[0].get<int>();
  config.scene.canvas_height = canvas[1].get<int>();

  if (j.contains("sources") == j.contains("source_grid")) {
    fail("exactly one of \"sources\" or \"source_grid\" is required");
  }
  if (j.contains("sources")) {
    const json& sources = j.at("sources");
    if (!sources.is_array()) fail("\"sources\" must be an array");
    for (std::size_t idx = 0; idx < sources.size(); ++idx) {
      const json& s = sources[idx];
      const std::string at = "sources[" + std::to_string(idx) + "]";
      reject_unknown(s, {"x", "y", "flux"}, at);
      PointSource src;
      src.x = number_at(s, "x", at);
      src.y = number_at(s, "y", at);
      src.flux = number_at(s, "flux", at);
      config.scene.sources.push_back(src);
    }
  } else {
    const json& g = j.at("source_grid");
    reject_unknown(g, {"nx", "ny", "spacing", "flux"}, "source_grid");
    const int nx = static_cast<int>(number_at(g, "nx", "source_grid"));
    const int ny = static_cast<int>(number_at(g, "ny", "source_grid"));
    const double spacing = number_at(g, "spacing", "source_grid");
    const double flux = number_at(g, "flux", "source_grid");
    if (nx < 1 || ny < 1) fail("source_grid: nx and ny must be >= 1");
    try {
      config.scene = make_grid_scene(config.scene.canvas_width,
                                     config.scene.canvas_height, nx, ny,
                                     spacing, flux);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  try {
    validate_scene(config.scene);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }

  if (!j.contains("psf")) fail("missing \"psf\" block");
  config.psf = parse_psf_block(j.at("psf"), base_dir);

  if (j.contains("distortion")) {
    config.distortion = parse_distortion_block(j.at("distortion"));
  }

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    reject_unknown(n, {"lambda", "seed"}, "noise");
    config.noise.lambda = number_at(n, "lambda", "noise");
    if (!(config.noise.lambda >= 0.0)) fail("noise.lambda must be >= 0");
    if (n.contains("seed")) {
      config.noise.seed = n.at("seed").get<std::uint64_t>();
    }
  }

  if (j.contains("downsample")) {
    config.downsample = j.at("downsample").get<int>();
    if (config.downsample < 1) fail("downsample must be >= 1");
    if (config.scene.canvas_width % config.downsample != 0 ||
        config.scene.canvas_height % config.downsample != 0) {
      fail("canvas dimensions must be divisible by downsample");
    }
  }
  return config;
}

DistortionSpec parse_distortion_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, true);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("distortion config: invalid JSON: ") +
                      e.what());
  }
  return parse_distortion_block(j);
}

FitOptions parse_fit_options(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, true);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("fit options: invalid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"model", "starts", "bounds", "fd_step", "tol_v", "tol_step",
                  "max_iterations", "seed", "param_scale", "downsample"},
                 "fit options");
  FitOptions options;
  if (j.contains("model")) {
    const std::string model = j.at("model").get<std::string>();
    if (model == "fredholm") {
      options.model = FitModel::fredholm;
    } else if (model == "pinhole") {
      options.model = FitModel::pinhole;
    } else {
      throw ConfigError("fit options: model must be \"fredholm\" or "
                        "\"pinhole\" (got \"" +
                        model + "\")");
    }
  }
  if (j.contains("starts")) options.starts = j.at("starts").get<int>();
  if (j.contains("bounds")) options.bounds = j.at("bounds").get<double>();
  if (j.contains("fd_step")) options.fd_step = j.at("fd_step").get<double>();
  if (j.contains("tol_v")) options.tol_v = j.at("tol_v").get<double>();
  if (j.contains("tol_step")) options.tol_step = j.at("tol_step").get<double>();
  if (j.contains("max_iterations")) {
    options.max_iterations = j.at("max_iterations").get<int>();
  }
  if (j.contains("seed")) options.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("param_scale")) {
    options.param_scale = j.at("param_scale").get<double>();
  }
  if (j.contains("downsample")) {
    options.downsample = j.at("downsample").get<int>();
  }
  return options;
}

std::string fit_report_to_json(const FitReport& report,
                               const std::string& residue_path) {
  json j;
  j["model"] = report.model == FitModel::fredholm ? "fredholm" : "pinhole";
  if (report.model == FitModel::fredholm) {
    j["theta"] = report.theta.theta;
    std::array<double, 12> scaled{};
    for (int k = 0; k < 12; ++k) scaled[k] = report.theta.theta[k] * 1e6;
    j["theta_times_1e6"] = scaled;
  } else {
    j["k"] = report.pinhole.k;
    std::array<double, 8> scaled{};
    for (int k = 0; k < 8; ++k) scaled[k] = report.pinhole.k[k] * 1e6;
    j["k_times_1e6"] = scaled;
  }
  j["value"] = report.value;
  j["value_per_source_flux"] = report.value_per_source_flux;
  j["value_per_total_flux"] = report.value_per_total_flux;
  j["lambda_hat"] = report.lambda_hat;
  if (report.chi2) {
    j["chi2"] = *report.chi2;
  } else {
    j["chi2"] = nullptr;
  }
  j["starts"] = report.starts;
  j["start_values"] = report.start_values;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["residue"] = residue_path;
  return j.dump(2);
}

}  // namespace fredholm
