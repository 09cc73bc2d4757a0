#include "fredholm/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "fredholm/log.hpp"
#include "fredholm/simulate.hpp"

namespace fredholm {
namespace {

void check_same_dims(const ScalarField& a, const ScalarField& b,
                     const char* op) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument(std::string(op) + ": grid mismatch (" +
                                std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " +
                                std::to_string(b.width) + "x" +
                                std::to_string(b.height) + ")");
  }
}

double sum_squared_residual(const ScalarField& observed,
                            const ScalarField& reconstructed) {
  check_same_dims(observed, reconstructed, "value_function");
  double total = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double r = observed.data[i] - reconstructed.data[i];
    total += r * r;
  }
  return total;
}

int model_dimension(FitModel model) {
  return model == FitModel::fredholm ? 12 : 8;
}

struct StartResult {
  std::vector<double> x;  // scaled parameters
  double value = std::numeric_limits<double>::infinity();
  double start_value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool ok = false;
  ScalarField reconstruction;
};

}  // namespace

std::pair<double, double> pinhole_warp(const PinholeParams& params, double x,
                                       double y) {
  const auto& k = params.k;
  const double x2 = x * x;
  const double y2 = y * y;
  return {(1.0 + k[0] * x + k[1] * y + k[2] * x2 + k[3] * y2) * x,
          (1.0 + k[4] * x + k[5] * y + k[6] * x2 + k[7] * y2) * y};
}

ScalarField render_model(const PointSourceScene& scene, const ReferencePsf& psf,
                         FitModel model, std::span<const double> params,
                         int downsample) {
  ScalarField image;
  if (model == FitModel::fredholm) {
    if (params.size() != 12) {
      throw std::invalid_argument("fredholm model takes 12 parameters");
    }
    ThetaVector theta;
    std::copy(params.begin(), params.end(), theta.theta.begin());
    image = render_fredholm(scene, psf, theta_to_polynomial(theta));
  } else {
    if (params.size() != 8) {
      throw std::invalid_argument("pinhole model takes 8 parameters");
    }
    PinholeParams k;
    std::copy(params.begin(), params.end(), k.k.begin());
    PointSourceScene warped = scene;
    for (PointSource& src : warped.sources) {
      const auto [xd, yd] = pinhole_warp(k, src.x, src.y);
      src.x = xd;
      src.y = yd;
    }
    image = render_fredholm(warped, psf, NoDistortion{});
  }
  return downsample > 1 ? block_downsample(image, downsample) : image;
}

double value_function(const ScalarField& observed,
                      const PointSourceScene& scene, const ReferencePsf& psf,
                      const ThetaVector& theta, int downsample) {
  return sum_squared_residual(
      observed, render_model(scene, psf, FitModel::fredholm,
                             std::span(theta.theta), downsample));
}

double value_function(const ScalarField& observed,
                      const PointSourceScene& scene, const ReferencePsf& psf,
                      const PinholeParams& params, int downsample) {
  return sum_squared_residual(
      observed,
      render_model(scene, psf, FitModel::pinhole, std::span(params.k),
                   downsample));
}

double estimate_lambda(const ScalarField& observed,
                       const ScalarField& reconstructed) {
  check_same_dims(observed, reconstructed, "estimate_lambda");
  double total = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    total += observed.data[i] - reconstructed.data[i];
  }
  return total / static_cast<double>(observed.size());
}

double chi_squared(const ScalarField& observed,
                   const ScalarField& reconstructed, double lambda_hat) {
  check_same_dims(observed, reconstructed, "chi_squared");
  if (!(lambda_hat > 0.0)) {
    throw std::domain_error(
        "chi_squared undefined for lambda_hat <= 0 (got " +
        std::to_string(lambda_hat) + ")");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double r = observed.data[i] - reconstructed.data[i] - lambda_hat;
    total += r * r;
  }
  return total / (static_cast<double>(observed.size()) * lambda_hat);
}

FitReport fit(const ScalarField& observed, const PointSourceScene& scene,
              const ReferencePsf& psf, const FitOptions& options) {
  if (options.starts < 1) throw std::invalid_argument("starts must be >= 1");
  if (!(options.bounds > 0.0)) {
    throw std::invalid_argument("bounds must be > 0");
  }
  if (!(options.param_scale > 0.0)) {
    throw std::invalid_argument("param_scale must be > 0");
  }
  if (options.downsample < 1 ||
      scene.canvas_width % options.downsample != 0 ||
      scene.canvas_height % options.downsample != 0) {
    throw std::invalid_argument("canvas not divisible by downsample factor");
  }
  if (observed.width != scene.canvas_width / options.downsample ||
      observed.height != scene.canvas_height / options.downsample) {
    throw std::invalid_argument(
        "observed image does not match the scene canvas / downsample factor");
  }

  const int dim = model_dimension(options.model);
  const double box = options.bounds * options.param_scale;
  const double h = options.fd_step;

  // Reconstruction from scaled parameters.
  const auto render_scaled = [&](const std::vector<double>& x) {
    std::vector<double> absolute(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      absolute[k] = x[k] / options.param_scale;
    }
    return render_model(scene, psf, options.model, absolute,
                        options.downsample);
  };

  // Start points: the origin plus uniform draws in the box.
  std::vector<std::vector<double>> start_points;
  start_points.emplace_back(dim, 0.0);
  std::mt19937_64 engine(options.seed);
  const auto canonical = [&engine] {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
  };
  for (int s = 1; s < options.starts; ++s) {
    std::vector<double> x(dim);
    for (int k = 0; k < dim; ++k) x[k] = (2.0 * canonical() - 1.0) * box;
    start_points.push_back(std::move(x));
  }

  const std::size_t pixels = observed.size();
  std::vector<StartResult> results;
  results.reserve(start_points.size());

  for (std::size_t s = 0; s < start_points.size(); ++s) {
    StartResult res;
    res.x = start_points[s];
    res.reconstruction = render_scaled(res.x);
    res.value = sum_squared_residual(observed, res.reconstruction);
    res.start_value = res.value;
    if (!std::isfinite(res.value)) {
      log::warn("fit: start " + std::to_string(s) +
                " produced a non-finite value; discarded");
      results.push_back(std::move(res));
      continue;
    }
    res.ok = true;
    if (res.value == 0.0) {
      res.converged = true;
      results.push_back(std::move(res));
      continue;
    }

    // Trust-region Gauss-Newton on the least-squares objective with
    // box-projected steps. The Jacobian of the reconstruction comes from
    // central finite differences on the scaled parameters; the step norm is
    // capped by an adaptive radius, which keeps near-degenerate parameter
    // directions (tightly sampled PSFs make some basis monomials collapse at
    // the kernel centres) from sliding to the box corners.
    Eigen::MatrixXd jac(pixels, dim);
    double radius = 0.01 * box;  // box-relative: invariant under rescaling
    const double radius_max = 2.0 * box;
    for (int it = 0; it < options.max_iterations; ++it) {
      for (int k = 0; k < dim; ++k) {
        std::vector<double> xp = res.x;
        std::vector<double> xm = res.x;
        xp[k] += h;
        xm[k] -= h;
        const ScalarField ip = render_scaled(xp);
        const ScalarField im = render_scaled(xm);
        const double inv = 1.0 / (2.0 * h);
        for (std::size_t p = 0; p < pixels; ++p) {
          jac(p, k) = (ip.data[p] - im.data[p]) * inv;
        }
      }
      Eigen::VectorXd residual(pixels);
      for (std::size_t p = 0; p < pixels; ++p) {
        residual[p] = observed.data[p] - res.reconstruction.data[p];
      }
      const Eigen::MatrixXd normal = jac.transpose() * jac;
      const Eigen::VectorXd gradient = jac.transpose() * residual;
      const double diag_scale = std::max(1.0, normal.diagonal().maxCoeff());

      // Step for a given damping, floored for null directions.
      const auto damped_step = [&](double mu) {
        Eigen::MatrixXd damped = normal;
        damped.diagonal().array() += mu + 1e-14 * diag_scale;
        return Eigen::VectorXd(damped.ldlt().solve(gradient));
      };

      bool accepted = false;
      for (int attempt = 0; attempt < 16 && !accepted; ++attempt) {
        // Inflate the damping until the step fits the trust radius.
        double mu = 0.0;
        Eigen::VectorXd delta = damped_step(mu);
        for (int grow = 0; grow < 60 && (!delta.allFinite() ||
                                         delta.norm() > radius);
             ++grow) {
          mu = mu == 0.0 ? 1e-10 * diag_scale : mu * 4.0;
          delta = damped_step(mu);
        }
        if (!delta.allFinite()) {
          radius *= 0.25;
          continue;
        }
        std::vector<double> x_new(res.x);
        for (int k = 0; k < dim; ++k) {
          x_new[k] = std::clamp(res.x[k] + delta[k], -box, box);
        }
        Eigen::VectorXd step(dim);
        for (int k = 0; k < dim; ++k) step[k] = x_new[k] - res.x[k];
        const double step_norm = step.norm();
        if (step_norm == 0.0 || step_norm < 0.01 * options.tol_step) {
          res.converged = true;
          break;
        }
        ScalarField recon_new = render_scaled(x_new);
        const double value_new = sum_squared_residual(observed, recon_new);
        const double predicted =
            2.0 * step.dot(gradient) - step.dot(normal * step);
        const double rho =
            predicted > 0.0 ? (res.value - value_new) / predicted : -1.0;
        if (std::isfinite(value_new) && value_new < res.value && rho > 1e-4) {
          const double decrease = res.value - value_new;
          const double value_old = res.value;
          res.x = std::move(x_new);
          res.reconstruction = std::move(recon_new);
          res.value = value_new;
          ++res.iterations;
          if (rho > 0.75 && step_norm > 0.8 * radius) {
            radius = std::min(2.0 * radius, radius_max);
          } else if (rho < 0.25) {
            radius = std::max(0.25 * radius, options.tol_step);
          }
          if (decrease < options.tol_v * value_old ||
              step_norm < options.tol_step) {
            res.converged = true;
          }
          accepted = true;
        } else {
          radius = 0.25 * std::min(radius, step_norm);
          if (radius < options.tol_step) {
            res.converged = true;
            break;
          }
        }
      }
      if (!accepted) {
        // No descent within finite-difference accuracy: local minimum.
        res.converged = true;
        break;
      }
      if (res.converged || res.value == 0.0) {
        res.converged = true;
        break;
      }
    }
    results.push_back(std::move(res));
  }

  const StartResult* best = nullptr;
  for (const StartResult& res : results) {
    if (res.ok && (!best || res.value < best->value)) best = &res;
  }
  if (!best) {
    throw std::runtime_error("fit: every start produced a non-finite value");
  }

  FitReport report;
  report.model = options.model;
  if (options.model == FitModel::fredholm) {
    for (int k = 0; k < 12; ++k) {
      report.theta.theta[k] = best->x[k] / options.param_scale;
    }
  } else {
    for (int k = 0; k < 8; ++k) {
      report.pinhole.k[k] = best->x[k] / options.param_scale;
    }
  }
  report.value = best->value;
  double total_flux = 0.0;
  for (const PointSource& src : scene.sources) total_flux += src.flux;
  const double mean_flux =
      scene.sources.empty() ? 0.0 : total_flux / scene.sources.size();
  report.value_per_source_flux =
      mean_flux > 0.0 ? best->value / (mean_flux * mean_flux) : 0.0;
  report.value_per_total_flux =
      total_flux > 0.0 ? best->value / (total_flux * total_flux) : 0.0;
  report.lambda_hat = estimate_lambda(observed, best->reconstruction);
  if (report.lambda_hat > 0.0) {
    report.chi2 =
        chi_squared(observed, best->reconstruction, report.lambda_hat);
  }
  report.starts = options.starts;
  for (const StartResult& res : results) {
    report.start_values.push_back(res.start_value);
  }
  report.iterations = best->iterations;
  report.converged = best->converged;
  report.residue = observed;
  for (std::size_t p = 0; p < pixels; ++p) {
    report.residue.data[p] -= best->reconstruction.data[p];
  }
  return report;
}

}  // namespace fredholm
