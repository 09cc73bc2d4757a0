#include <cmath>
#include <stdexcept>
#include <variant>

#include "doctest.h"
#include "fredholm/config.hpp"
#include "fredholm/simulate.hpp"
#include "oracles.hpp"

using namespace fredholm;

namespace {

ThetaVector demo_theta() {
  ThetaVector theta;
  theta.theta = {0e-6, -2e-6, 0e-6, 2e-6, 1e-6, 2e-6,
                 0e-6, 1e-6,  0e-6, 3e-6, 1e-6, -1e-6};
  return theta;
}

ScalarField crop_around(const ScalarField& image, double x, double y,
                        int half) {
  const int row = image.row_of_v(y);
  const int col = image.col_of_u(x);
  ScalarField out(2 * half + 1, 2 * half + 1);
  for (int r = -half; r <= half; ++r) {
    for (int c = -half; c <= half; ++c) {
      out.at(r + half, c + half) = image.at(row + r, col + c);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("shift-invariant rendering reproduces the reference PSF") {
  PointSourceScene scene;
  scene.canvas_width = 101;
  scene.canvas_height = 101;
  scene.sources = {{0.0, 0.0, 1e4}};
  const ReferencePsf psf = GaussianPsf{4.0};
  const ScalarField image = render_fredholm(scene, psf, NoDistortion{});

  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      const double du = image.u_of_col(c);
      const double dv = image.v_of_row(r);
      if (du * du + dv * dv > 32.0 * 32.0) {
        CHECK(image.at(r, c) == 0.0);  // beyond the support cutoff
      } else {
        CHECK(image.at(r, c) ==
              doctest::Approx(1e4 * oracles::gaussian(4.0, du, dv))
                  .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("shift invariance: crops around any two integer sources agree") {
  PointSourceScene scene;
  scene.canvas_width = 151;
  scene.canvas_height = 151;
  scene.sources = {{-40.0, -25.0, 1e4}, {30.0, 45.0, 1e4}};
  const ScalarField image =
      render_fredholm(scene, GaussianPsf{3.0}, NoDistortion{});
  const ScalarField a = crop_around(image, -40.0, -25.0, 12);
  const ScalarField b = crop_around(image, 30.0, 45.0, 12);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(std::abs(a.data[k] - b.data[k]) <= 1e-12);
  }
}

TEST_CASE("distortion-free condition at render level") {
  PointSourceScene scene;
  scene.canvas_width = 101;
  scene.canvas_height = 101;
  scene.sources = {{0.0, 0.0, 1e4}};
  const ReferencePsf psf = GaussianPsf{3.0};
  const ScalarField reference = render_fredholm(scene, psf, NoDistortion{});
  const ScalarField distorted =
      render_fredholm(scene, psf, theta_to_polynomial(demo_theta()));
  for (std::size_t k = 0; k < reference.size(); ++k) {
    CHECK(std::abs(distorted.data[k] - reference.data[k]) <= 1e-12);
  }
}

TEST_CASE("superposition: two-source render equals the sum of singles") {
  PointSourceScene both;
  both.canvas_width = 121;
  both.canvas_height = 121;
  both.sources = {{-20.0, 10.0, 2e4}, {25.0, -15.0, 3e4}};
  PointSourceScene first = both;
  first.sources = {both.sources[0]};
  PointSourceScene second = both;
  second.sources = {both.sources[1]};

  const DistortionSpec spec = theta_to_polynomial(demo_theta());
  const ReferencePsf psf = GaussianPsf{3.0};
  const ScalarField sum_image = render_fredholm(both, psf, spec);
  const ScalarField a = render_fredholm(first, psf, spec);
  const ScalarField b = render_fredholm(second, psf, spec);
  for (std::size_t k = 0; k < sum_image.size(); ++k) {
    CHECK(sum_image.data[k] == a.data[k] + b.data[k]);
  }
}

TEST_CASE("rendering is deterministic") {
  const PointSourceScene scene = make_grid_scene(155, 155, 3, 3, 40.0, 1e4);
  const DistortionSpec spec = theta_to_polynomial(demo_theta());
  const ScalarField a = render_fredholm(scene, GaussianPsf{4.0}, spec);
  const ScalarField b = render_fredholm(scene, GaussianPsf{4.0}, spec);
  CHECK(a == b);
}

TEST_CASE("single-term catalog: f = 1e-3 vx leaves the x = 0 column fixed") {
  const PointSourceScene scene = make_grid_scene(205, 205, 3, 3, 60.0, 1e4);
  DistortionPolynomial poly;
  poly.f_terms = {{1, 0, 0, 1, 1e-3}};  // vx
  const ScalarField image = render_fredholm(scene, GaussianPsf{4.0}, poly);

  for (const PointSource& src : scene.sources) {
    // Kernel centre satisfies u = x - f(u, v); x-moment of the crop locates it.
    const ScalarField crop = crop_around(image, src.x, src.y, 20);
    double mass = 0.0;
    double moment = 0.0;
    for (int r = 0; r < crop.height; ++r) {
      for (int c = 0; c < crop.width; ++c) {
        mass += crop.at(r, c);
        moment += crop.at(r, c) * (c - 20);
      }
    }
    const double centroid_shift = moment / mass;
    if (src.x == 0.0) {
      CHECK(std::abs(centroid_shift) <= 1e-9);
    } else {
      // f = 1e-3 v x displaces the kernel by about -f(y_s, x_s) along u.
      const double expected = -1e-3 * src.y * src.x;
      CHECK(std::abs(centroid_shift - expected) <= 0.5);
    }
  }
}

TEST_CASE("logarithmic distortion keeps the origin source fixed") {
  PointSourceScene scene;
  scene.canvas_width = 101;
  scene.canvas_height = 101;
  scene.sources = {{0.0, 0.0, 1e4}};
  const LogarithmicDistortion log_spec{1.0, 1.0, 1e-5};
  const ScalarField with_log =
      render_fredholm(scene, GaussianPsf{3.0}, log_spec);
  const ScalarField without =
      render_fredholm(scene, GaussianPsf{3.0}, NoDistortion{});
  for (std::size_t k = 0; k < with_log.size(); ++k) {
    CHECK(with_log.data[k] == without.data[k]);
  }
  const auto [f, g] = distortion_shift(log_spec, 30.0, 40.0, 50.0, 60.0);
  CHECK(f == doctest::Approx(50.0 * std::log1p(1e-5 * 2500.0)));
  CHECK(g == doctest::Approx(60.0 * std::log1p(1e-5 * 2500.0)));
}

TEST_CASE("add_poisson_noise") {
  SUBCASE("lambda = 0 is the identity") {
    const ScalarField image(64, 64, 3.5);
    CHECK(add_poisson_noise(image, {0.0, 99}) == image);
  }
  SUBCASE("negative pixels are rejected") {
    ScalarField image(8, 8);
    image.at(3, 3) = -1.0;
    CHECK_THROWS_AS(add_poisson_noise(image, {5.0, 1}), std::invalid_argument);
  }
  SUBCASE("sample mean approaches lambda") {
    const ScalarField zero(505, 505);
    const ScalarField noisy = add_poisson_noise(zero, {50.0, 42});
    const double mean = noisy.sum() / static_cast<double>(noisy.size());
    const double bound = 3.0 * std::sqrt(50.0) / 505.0;
    CHECK(std::abs(mean - 50.0) <= bound);
  }
  SUBCASE("identical seeds reproduce, fresh seeds differ") {
    const ScalarField zero(32, 32);
    const ScalarField a = add_poisson_noise(zero, {5.0, 7});
    const ScalarField b = add_poisson_noise(zero, {5.0, 7});
    const ScalarField c = add_poisson_noise(zero, {5.0, 8});
    CHECK(a == b);
    CHECK(a.data != c.data);
  }
}

TEST_CASE("render_downsampled_scene") {
  const PointSourceScene scene = make_grid_scene(155, 155, 3, 3, 40.0, 1e3);
  const DistortionSpec spec = theta_to_polynomial(demo_theta());
  const ReferencePsf psf = GaussianPsf{4.0};

  SUBCASE("factor 1 equals render_fredholm") {
    CHECK(render_downsampled_scene(scene, psf, spec, 1) ==
          render_fredholm(scene, psf, spec));
  }
  SUBCASE("flux is conserved") {
    // Block sums are pure additions; the two totals differ only by
    // accumulation order.
    const ScalarField full = render_fredholm(scene, psf, spec);
    const ScalarField down = render_downsampled_scene(scene, psf, spec, 5);
    CHECK(down.width == 31);
    CHECK(down.sum() == doctest::Approx(full.sum()).epsilon(1e-12));
  }
  SUBCASE("indivisible canvas is rejected") {
    CHECK_THROWS_AS(render_downsampled_scene(scene, psf, spec, 2),
                    std::invalid_argument);
  }
}

TEST_CASE("render_extended matches an equivalent point-source scene") {
  ScalarField object(61, 61);
  object.at(20, 25) = 2e3;
  object.at(40, 31) = 1e3;
  PointSourceScene scene;
  scene.canvas_width = 61;
  scene.canvas_height = 61;
  scene.sources = {
      {object.u_of_col(25), object.v_of_row(20), 2e3},
      {object.u_of_col(31), object.v_of_row(40), 1e3},
  };
  const ReferencePsf psf = GaussianPsf{2.0};
  const ScalarField a = render_extended(object, psf, NoDistortion{});
  const ScalarField b = render_fredholm(scene, psf, NoDistortion{});
  CHECK(a == b);
}

TEST_CASE("scene config parsing") {
  SUBCASE("full block") {
    const SceneConfig config = parse_scene_config(R"({
      "canvas": [505, 505],
      "source_grid": {"nx": 9, "ny": 9, "spacing": 50, "flux": 1e5},
      "psf": {"gaussian": {"sigma": 10}},
      "distortion": {"theta": [0,-2e-6,0,2e-6,1e-6,2e-6,0,1e-6,0,3e-6,1e-6,-1e-6]},
      "noise": {"lambda": 5, "seed": 42},
      "downsample": 1
    })");
    CHECK(config.scene.sources.size() == 81);
    CHECK(std::get<GaussianPsf>(config.psf).sigma == 10.0);
    CHECK(config.noise.lambda == 5.0);
    CHECK(std::holds_alternative<DistortionPolynomial>(config.distortion));
  }
  SUBCASE("explicit source list") {
    const SceneConfig config = parse_scene_config(R"({
      "canvas": [101, 101],
      "sources": [{"x": 0, "y": 0, "flux": 1e5}],
      "psf": {"gaussian": {"sigma": 3}}
    })");
    CHECK(config.scene.sources.size() == 1);
    CHECK(std::holds_alternative<NoDistortion>(config.distortion));
    CHECK(config.noise.lambda == 0.0);
  }
  SUBCASE("missing psf block names the field") {
    CHECK_THROWS_WITH_AS(parse_scene_config(R"({
      "canvas": [101, 101],
      "sources": [{"x": 0, "y": 0, "flux": 1e5}]
    })"),
                         doctest::Contains("psf"), ConfigError);
  }
  SUBCASE("sources outside the canvas are rejected") {
    CHECK_THROWS_AS(parse_scene_config(R"({
      "canvas": [101, 101],
      "sources": [{"x": 90, "y": 0, "flux": 1e5}],
      "psf": {"gaussian": {"sigma": 3}}
    })"),
                    ConfigError);
  }
}
