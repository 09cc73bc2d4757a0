#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "fredholm/estimate.hpp"
#include "fredholm/grid.hpp"
#include "fredholm/psf.hpp"
#include "fredholm/simulate.hpp"

namespace fredholm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scene description:
/// {
///   "canvas": [W, H],
///   "sources": [{"x":.., "y":.., "flux":1e5}, ...],      (or "source_grid")
///   "psf": {"gaussian": {"sigma": 10}},
///   "distortion": {"theta": [...]} | {"f_terms": [...], "g_terms": [...]}
///                | {"logarithmic": {"cf":1, "cg":1, "scale":1e-5}}
///                | {"none": {}},
///   "noise": {"lambda": 5, "seed": 42},
///   "downsample": 1
/// }
struct SceneConfig {
  PointSourceScene scene;
  ReferencePsf psf = GaussianPsf{1.0};
  DistortionSpec distortion = NoDistortion{};
  NoiseSpec noise;
  int downsample = 1;
};

/// Parses and validates a scene config. `base_dir` resolves relative paths
/// (tabulated PSF tables). Throws ConfigError naming the offending field.
SceneConfig parse_scene_config(const std::string& json_text,
                               const std::filesystem::path& base_dir = {});

/// {"model":"fredholm","starts":8,"bounds":1e-4,"fd_step":1e-2,
///  "tol_v":1e-10,"seed":7} plus optional tol_step / max_iterations /
/// param_scale / downsample. Missing fields keep their defaults.
FitOptions parse_fit_options(const std::string& json_text);

/// FitReport as structured text (one JSON object).
std::string fit_report_to_json(const FitReport& report,
                               const std::string& residue_path);

/// Distortion config block on its own (same forms as the scene block).
DistortionSpec parse_distortion_config(const std::string& json_text);

}  // namespace fredholm
