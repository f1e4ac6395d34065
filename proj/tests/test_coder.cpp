#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "zdjscc/coder/coder.hpp"
#include "zdjscc/coder/simulation.hpp"
#include "zdjscc/design/design.hpp"
#include "zdjscc/error.hpp"

using namespace zdjscc;

namespace {

Matrix s1(double v) { return Matrix{{v}}; }

SourceModel scalar_source(double a, double q) {
  if (std::abs(a) > 1.0) return SourceModel{Matrix(0, 0), {a}, s1(q)};
  return SourceModel{s1(a), {}, s1(q)};
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::Config;
}

}  // namespace

TEST_CASE("encode examples") {
  const auto miso1 = ChannelModel::miso(s1(1.0), 1.0, 1.0);
  const EncoderDesign strict{s1(1.0), EncoderMode::Strict, 1.0};
  CHECK(encode(strict, miso1, s1(1.0), s1(0.0)) == s1(0.0));
  CHECK(encode(strict, miso1, s1(1.0), s1(1.0)) == s1(1.0));

  const auto miso2 = ChannelModel::miso(Matrix{{0.6, 0.8}}, 1.0, 4.0);
  const EncoderDesign two{s1(2.0), EncoderMode::Strict, 4.0};
  const Matrix x = encode(two, miso2, s1(1.0), s1(1.0));
  REQUIRE(x.rows() == 2);
  CHECK(x(0, 0) == doctest::Approx(1.2));
  CHECK(x(1, 0) == doctest::Approx(1.6));
  CHECK(x.frobenius_norm() == doctest::Approx(2.0));

  // Normalized: u = sqrt(p / P) e for scalar sources, regardless of |Gamma|.
  const EncoderDesign norm{s1(7.0), EncoderMode::PowerNormalized, 4.0};
  CHECK(encode(norm, miso1, s1(1.0), s1(1.0))(0, 0) == doctest::Approx(2.0));
  CHECK(encode(norm, miso1, s1(4.0), s1(1.0))(0, 0) == doctest::Approx(1.0));
  CHECK(instantaneous_power(effective_gamma(norm, s1(2.5)), s1(2.5)) == doctest::Approx(4.0));

  const auto simo = ChannelModel::simo(Matrix{{1.0}, {1.0}}, Matrix::identity(2), 1.0);
  CHECK(encode(strict, simo, s1(2.0), s1(3.0)) == s1(1.5));
}

TEST_CASE("silent and degenerate encoders") {
  const EncoderDesign zero{Matrix{{0.0, 0.0}}, EncoderMode::PowerNormalized, 5.0};
  CHECK(encoder_row(zero, Matrix::identity(2)).max_abs() == 0.0);
  const EncoderDesign bad{Matrix{{0.0, 1.0}}, EncoderMode::PowerNormalized, 5.0};
  const Matrix not_pd = Matrix::diagonal(std::vector<double>{1.0, -1.0});
  CHECK(code_of([&] { effective_gamma(bad, not_pd); }) == ErrorCode::DegenerateDirection);
}

TEST_CASE("kalman_gain examples") {
  const Matrix a = s1(2.0);
  CHECK(kalman_gain(a, s1(0.0), s1(1.0), s1(1.0), s1(3.0)).max_abs() == 0.0);
  const double g = std::sqrt(15.0);
  const Matrix k = kalman_gain(a, s1(g), s1(1.0), s1(1.0), s1(3.0));
  CHECK(k(0, 0) == doctest::Approx(2.0 * g / 6.0).epsilon(1e-14));
  const double far = kalman_gain(a, s1(g), s1(1.0), s1(1e12), s1(3.0))(0, 0);
  CHECK(std::abs(far) < 1e-10);
  CHECK(std::abs(far) < std::abs(kalman_gain(a, s1(g), s1(1.0), s1(1e6), s1(3.0))(0, 0)));
  CHECK(code_of([&] { kalman_gain(a, s1(g), s1(0.0), s1(0.0), s1(3.0)); }) ==
        ErrorCode::SingularInnovationCovariance);
}

TEST_CASE("decoder_update examples") {
  FilterState st;
  st.s_hat = Matrix{{1.0}, {-1.0}};
  const Matrix a{{2.0, 0.0}, {1.0, 0.5}};
  const Matrix as = a * st.s_hat;
  CHECK(decoder_update(st, a, Matrix(2, 1), s1(5.0), s1(0.0)) == as);
  CHECK(decoder_update(st, a, Matrix{{1.0}, {1.0}}, s1(5.0), s1(5.0)) == as);

  FilterState sc;
  sc.s_hat = s1(1.0);
  CHECK(decoder_update(sc, s1(2.0), s1(0.5), s1(2.0), s1(0.0))(0, 0) == doctest::Approx(3.0));
  CHECK(code_of([&] { decoder_update(sc, s1(2.0), Matrix(1, 2), s1(2.0), s1(0.0)); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("riccati_step examples") {
  const Matrix a{{0.9, 0.2}, {0.0, 1.5}};
  const Matrix q{{1.0, 0.1}, {0.1, 2.0}};
  const Matrix p{{2.0, 0.3}, {0.3, 1.0}};
  const EncoderDesign silent{Matrix{{0.0, 0.0}}, EncoderMode::Strict, 1.0};
  const Matrix open = a * p * a.transpose() + q;
  CHECK(max_abs_diff(riccati_step(a, q, silent, s1(1.0), s1(1.0), p), open) <= 1e-14);

  const EncoderDesign strict{s1(std::sqrt(15.0)), EncoderMode::Strict, 5.0};
  CHECK(riccati_step(s1(2.0), s1(1.0), strict, s1(1.0), s1(1.0), s1(3.0))(0, 0) == doctest::Approx(3.0));
  CHECK(riccati_step(s1(2.0), s1(1.0), strict, s1(1.0), s1(1.0), s1(1.0))(0, 0) == doctest::Approx(1.25));

  // Normalized scalar: p' = (a^2 r / (r + p)) P + q.
  const EncoderDesign norm{s1(1.0), EncoderMode::PowerNormalized, 5.0};
  CHECK(riccati_step(s1(2.0), s1(1.0), norm, s1(1.0), s1(1.0), s1(1.0))(0, 0) == doctest::Approx(4.0 / 6.0 + 1.0));
  CHECK(riccati_step(s1(2.0), s1(1.0), norm, s1(1.0), s1(1.0), s1(3.0))(0, 0) == doctest::Approx(3.0));

  CHECK(code_of([&] { riccati_step(s1(2.0), s1(1.0), strict, s1(1.0), s1(1.0), s1(-1.0)); }) == ErrorCode::NotPD);
}

TEST_CASE("MISO direction and SIMO combining reduce to the scalar channel") {
  const SourceModel src = scalar_source(2.0, 1.0);
  const EncoderDesign strict{s1(2.5), EncoderMode::Strict, 5.0};
  const Matrix p = s1(1.7);
  const Matrix base = riccati_step(src, ChannelModel::miso(s1(1.0), 1.0, 5.0), strict, p);
  const Matrix tilted = riccati_step(src, ChannelModel::miso(Matrix{{0.6, 0.8}}, 1.0, 5.0), strict, p);
  CHECK(max_abs_diff(base, tilted) <= 1e-14);

  // H = [1; 1], R = I has H^T R^{-1} H = 2: same as MISO with r = 1/2.
  const Matrix simo = riccati_step(src, ChannelModel::simo(Matrix{{1.0}, {1.0}}, Matrix::identity(2), 5.0), strict, p);
  const Matrix half = riccati_step(src, ChannelModel::miso(s1(1.0), 0.5, 5.0), strict, p);
  CHECK(max_abs_diff(simo, half) <= 1e-13);
}

TEST_CASE("default_initial_covariance") {
  CHECK(default_initial_covariance(Matrix::identity(2)) == Matrix::identity(2));
  const Matrix d = default_initial_covariance(Matrix::diagonal(std::vector<double>{1.0, 0.0}));
  CHECK(d(1, 1) == doctest::Approx(1e-9));
  CHECK(psd_check(d) == Definiteness::PD);
}

TEST_CASE("simulate_trajectory examples") {
  // Degenerate zero source: S stays 0 and the error is -S_hat, driven by channel noise.
  const SourceModel zero{s1(0.5), {}, s1(0.0)};
  const auto ch = ChannelModel::miso(s1(1.0), 1.0, 1.0);
  const EncoderDesign norm1{s1(1.0), EncoderMode::PowerNormalized, 1.0};
  RngState rng(5);
  const auto rec = simulate_trajectory(zero, ch, norm1, rng, 50);
  CHECK_FALSE(rec.diverged);
  bool any_error = false;
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(rec.state[t] == 0.0);
    CHECK(rec.squared_error[t] == doctest::Approx(rec.error[t] * rec.error[t]));
    any_error = any_error || rec.error[t] != 0.0;
  }
  CHECK(any_error);

  const SourceModel src{Matrix{{0.5, 0.1}, {0.0, -0.4}}, {1.7}, Matrix::identity(3)};
  const auto ch3 = ChannelModel::miso(Matrix{{0.6, 0.8}}, 1.0, 9.0);
  const EncoderDesign norm{Matrix{{0.0, 0.0, 1.0}}, EncoderMode::PowerNormalized, 9.0};
  RngState r1(77), r2(77);
  const auto a = simulate_trajectory(src, ch3, norm, r1, 40);
  const auto b = simulate_trajectory(src, ch3, norm, r2, 40);
  CHECK(a.squared_error == b.squared_error);
  CHECK(a.input_power == b.input_power);
  CHECK(a.state == b.state);

  // A = 0, Gamma = 0: S_t = W_{t-1}, unit variance.
  const SourceModel white{s1(0.0), {}, s1(1.0)};
  const EncoderDesign silent{s1(0.0), EncoderMode::Strict, 0.0};
  const auto rep = monte_carlo(white, ch, silent, 3, 5, 10000);
  for (std::size_t t = 0; t < 5; ++t) CHECK(std::abs(rep.empirical_mse[t] - 1.0) <= 0.05);

  RngState r3(1);
  CHECK(code_of([&] { simulate_trajectory(white, ch, silent, r3, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("monte_carlo examples") {
  const auto ch = ChannelModel::miso(s1(1.0), 1.0, 5.0);
  const SourceModel stable = scalar_source(0.5, 1.0);
  const EncoderDesign silent{s1(0.0), EncoderMode::Strict, 5.0};
  const auto open = monte_carlo(stable, ch, silent, 1, 100, 10000);
  CHECK(std::abs(open.d_estimate - 4.0 / 3.0) <= 0.05 * 4.0 / 3.0);
  CHECK(open.analytic_tail == doctest::Approx(4.0 / 3.0).epsilon(1e-9));

  const SourceModel unstable = scalar_source(2.0, 1.0);
  const EncoderDesign norm{s1(1.0), EncoderMode::PowerNormalized, 5.0};
  const auto rep = monte_carlo(unstable, ch, norm, 2, 200, 10000);
  CHECK(rep.trace_p.size() == 200);
  CHECK(rep.trace_p[1] == doctest::Approx(4.0 / 6.0 + 1.0));
  CHECK(std::abs(rep.d_estimate - 3.0) <= 0.1 * 3.0);
  double pw = 0.0;
  for (std::size_t t = rep.tail_start; t < 200; ++t) pw += rep.empirical_power[t];
  pw /= double(200 - rep.tail_start);
  CHECK(std::abs(pw - 5.0) <= 0.05 * 5.0);
  CHECK_FALSE(rep.diverged);

  CHECK(code_of([&] { monte_carlo(unstable, ch, norm, 2, 10, 0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { monte_carlo(unstable, ch, norm, 2, 0, 10); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("monte_carlo is independent of the thread count") {
  const SourceModel src{s1(0.3), {-1.8}, Matrix{{1.0, 0.2}, {0.2, 1.0}}};
  const auto ch = ChannelModel::simo(Matrix{{1.0}, {0.5}}, Matrix::identity(2), 6.0);
  const EncoderDesign norm{Matrix{{0.0, 1.0}}, EncoderMode::PowerNormalized, 6.0};
  SimulationOptions one, four;
  one.threads = 1;
  four.threads = 4;
  const auto a = monte_carlo(src, ch, norm, 9, 60, 300, one);
  const auto b = monte_carlo(src, ch, norm, 9, 60, 300, four);
  CHECK(a.empirical_mse == b.empirical_mse);
  CHECK(a.empirical_power == b.empirical_power);
  CHECK(a.mean_error == b.mean_error);
}

TEST_CASE("divergent runs are marked, not thrown") {
  const SourceModel src = scalar_source(2.0, 1.0);
  const auto ch = ChannelModel::miso(s1(1.0), 1.0, 2.0);
  const EncoderDesign norm{s1(1.0), EncoderMode::PowerNormalized, 2.0};
  const auto rep = monte_carlo(src, ch, norm, 4, 200, 10);
  CHECK(rep.diverged);
  REQUIRE(rep.diverged_at.has_value());
  // p' = (4/3) p + 1 crosses 1e9 after about 70 steps.
  CHECK(*rep.diverged_at > 50);
  CHECK(*rep.diverged_at < 90);
}

namespace {

struct RandomCase {
  SourceModel source;
  ChannelModel channel;
  EncoderDesign design;
};

// Feasible random models with a comfortable capacity margin.
RandomCase random_case(testing::Gen& g) {
  for (;;) {
    const std::size_t ks = g.integer(0, 2);
    const std::size_t ku = g.integer(0, 2);
    const std::size_t k = ks + ku;
    if (k == 0) continue;
    SourceModel src{g.contraction(ks, g.uniform(0.2, 0.8)), ku ? g.distinct_magnitudes(ku, 1.1, 1.8, 0.1)
                                                                 : std::vector<double>{},
                    g.spd(k, 0.3)};
    const bool miso = g.coin();
    const double det2 = src.det_a_u() * src.det_a_u();
    const double s = (det2 - 1.0) * g.uniform(1.5, 3.0) + 1.0;
    ChannelModel ch = miso ? ChannelModel::miso(testing::unit_row(g, g.integer(1, 3)), 1.0, s)
                           : ChannelModel::simo(Matrix{{1.0}, {0.0}}, Matrix::identity(2), s);
    if (!validate_model(src, ch).valid()) continue;
    std::vector<double> gam(k, 0.0);
    for (std::size_t i = ks; i < k; ++i) gam[i] = 1.0;
    if (ku == 0) gam.assign(k, 0.0);
    return {src, ch, EncoderDesign{Matrix::row(gam), EncoderMode::PowerNormalized, s}};
  }
}

}  // namespace

TEST_CASE("property: empirical error covariance tracks the Riccati recursion") {
  testing::Gen g(31);
  const std::size_t n = 2000;
  for (int trial = 0; trial < 8; ++trial) {
    const RandomCase c = random_case(g);
    const auto rep = monte_carlo(c.source, c.channel, c.design, 100 + trial, 60, n);
    const auto sched = build_schedule(c.source, c.channel, c.design, 60);
    for (std::size_t t = 0; t < 60; ++t) {
      const double tol = 6.0 * sched.steps[t].p.frobenius_norm() * std::sqrt(2.0 / n);
      CHECK(std::abs(rep.empirical_covariance_trace(t) - rep.trace_p[t]) <= tol);
    }
  }
}

TEST_CASE("property: normalized mode spends exactly the power budget") {
  testing::Gen g(32);
  const std::size_t n = 4000;
  for (int trial = 0; trial < 8; ++trial) {
    const RandomCase c = random_case(g);
    if (c.source.unstable_dim() == 0) continue;
    const auto sched = build_schedule(c.source, c.channel, c.design, 80);
    for (const auto& st : sched.steps) CHECK(std::abs(st.power - c.channel.power) <= 1e-12 * c.channel.power);
    const auto rep = monte_carlo(c.source, c.channel, c.design, 200 + trial, 80, n);
    double mean = 0.0;
    for (double v : rep.empirical_power) mean += v;
    mean /= 80.0;
    // Each step averages n squared Gaussians of variance p.
    CHECK(std::abs(mean - c.channel.power) <= 6.0 * c.channel.power * std::sqrt(2.0 / (n * 80.0)) + 1e-12);
  }
}

TEST_CASE("property: starting at the Riccati fixed point keeps trace(P_t) constant") {
  testing::Gen g(33);
  for (int trial = 0; trial < 10; ++trial) {
    const RandomCase c = random_case(g);
    const DareResult d = dare_fixed_point(c.source, c.channel, c.design);
    REQUIRE(d.status == DareStatus::Converged);
    SimulationOptions so;
    so.initial_covariance = d.p;
    const auto sched = build_schedule(c.source, c.channel, c.design, 50, so);
    for (const auto& st : sched.steps) CHECK(std::abs(st.p.trace() - d.p.trace()) <= 1e-9 * (1.0 + d.p.trace()) * 10);
  }
}

TEST_CASE("property: decoder is unbiased") {
  testing::Gen g(34);
  const std::size_t n = 4000;
  for (int trial = 0; trial < 6; ++trial) {
    const RandomCase c = random_case(g);
    const auto rep = monte_carlo(c.source, c.channel, c.design, 300 + trial, 40, n);
    const std::size_t k = c.source.dim();
    for (std::size_t t = 0; t < 40; ++t) {
      const double bound = 4.0 * std::sqrt(rep.trace_p[t] / n);
      for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(rep.mean_error[t * k + i]) <= bound);
    }
  }
}

TEST_CASE("property: perturbing the Kalman gain never helps") {
  const SourceModel src{s1(0.6), {1.6}, Matrix{{1.0, 0.3}, {0.3, 1.0}}};
  const auto ch = ChannelModel::miso(Matrix{{0.6, 0.8}}, 1.0, 4.0);
  const EncoderDesign norm{Matrix{{0.0, 1.0}}, EncoderMode::PowerNormalized, 4.0};
  const std::size_t n = 4000, horizon = 100;
  const auto base = monte_carlo(src, ch, norm, 55, horizon, n);
  // Noise of the tail mean of ||e||^2 with common random numbers is far below this.
  const double slack = 0.01 * base.d_estimate;
  for (std::size_t i = 0; i < 2; ++i) {
    for (double f : {0.9, 1.1}) {
      std::vector<double> mult(2, 1.0);
      mult[i] = f;
      SimulationOptions so;
      so.gain_perturbation = Matrix::column(mult);
      const auto pert = monte_carlo(src, ch, norm, 55, horizon, n, so);
      CHECK(pert.d_estimate >= base.d_estimate - slack);
    }
  }
}
