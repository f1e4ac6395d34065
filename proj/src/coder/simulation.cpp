#include "zdjscc/coder/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "zdjscc/error.hpp"
#include "zdjscc/matlib/kernels.hpp"

namespace zdjscc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kChunk = 64;

double divergence_level(const Matrix& q, double threshold) {
  const double tq = q.trace();
  return tq > 0.0 ? threshold * tq : threshold;
}

// Everything a replica needs, flattened to raw row-major buffers.
struct Prepared {
  std::size_t k = 0;    // state dimension
  std::size_t m = 0;    // channel outputs
  std::size_t nin = 0;  // channel inputs
  bool miso = true;
  std::vector<double> a;  // k x k
  std::vector<double> h;  // m x nin
  std::vector<std::vector<double>> rows;   // per step, encoder row (k)
  std::vector<std::vector<double>> gains;  // per step, K_t (k x m)
  MvnSampler initial;
  MvnSampler process;
  MvnSampler noise;
  std::size_t horizon = 0;

  Prepared(const SourceModel& source, const ChannelModel& channel, const CodeSchedule& schedule,
           const Matrix& p0, const std::optional<Matrix>& gain_perturbation)
      : initial(p0), process(source.q), noise(channel.r) {
    k = source.dim();
    m = channel.outputs();
    nin = channel.inputs();
    miso = channel.kind == ChannelKind::MISO;
    a = source.a().to_vector();
    h = channel.h.to_vector();
    horizon = schedule.horizon;
    for (const auto& step : schedule.steps) {
      rows.push_back(step.encoder_row.to_vector());
      std::vector<double> g = step.gain.to_vector();
      if (gain_perturbation) {
        if (gain_perturbation->rows() != k || gain_perturbation->cols() != m) {
          throw Error(ErrorCode::DimensionMismatch, "gain_perturbation must be k x m");
        }
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= gain_perturbation->data()[i];
      }
      gains.push_back(std::move(g));
    }
  }
};

// Runs one realization, calling sink(t, error, squared_error, input_power, state)
// for every step backed by the schedule. Returns the number of steps run.
// The error e = S - S_hat is propagated directly (e' = A e + W - K Y) rather
// than by differencing S and S_hat, which for an unstable source grow without
// bound and would cancel catastrophically.
template <class Sink>
std::size_t run_replica(const Prepared& pr, RngState& rng, Sink&& sink) {
  const std::size_t k = pr.k;
  const std::size_t m = pr.m;
  std::vector<double> s(k), e(k), next(k), w(k), x(pr.miso ? pr.nin : 1), z(m), y(m);
  pr.initial.draw(rng, s.data());  // S_0 ~ N(0, P_0), S_hat_0 = 0
  e = s;
  const std::size_t steps = std::min(pr.horizon, pr.rows.size());
  for (std::size_t t = 0; t < steps; ++t) {
    const double u = kernels::dot(pr.rows[t].data(), e.data(), k);
    pr.noise.draw(rng, z.data());
    if (pr.miso) {
      for (std::size_t j = 0; j < pr.nin; ++j) x[j] = pr.h[j] * u;  // X = H^T u
      y[0] = kernels::dot(pr.h.data(), x.data(), pr.nin) + z[0];
    } else {
      x[0] = u;
      for (std::size_t i = 0; i < m; ++i) y[i] = pr.h[i] * u + z[i];
    }
    sink(t, e.data(), kernels::sum_squares(e.data(), k), kernels::sum_squares(x.data(), x.size()), s.data());

    pr.process.draw(rng, w.data());
    // e_{t+1} = A e_t + W_t - K_t Y_t
    const double* gain = pr.gains[t].data();
    for (std::size_t i = 0; i < k; ++i) {
      next[i] = kernels::dot(pr.a.data() + i * k, e.data(), k) + w[i] - kernels::dot(gain + i * m, y.data(), m);
    }
    e.swap(next);
    // S_{t+1} = A S_t + W_t
    for (std::size_t i = 0; i < k; ++i) next[i] = kernels::dot(pr.a.data() + i * k, s.data(), k) + w[i];
    s.swap(next);
  }
  return steps;
}

struct Accumulator {
  std::vector<double> sq, pw, err;
  explicit Accumulator(std::size_t horizon, std::size_t k) : sq(horizon, 0.0), pw(horizon, 0.0), err(horizon * k, 0.0) {}
};

}  // namespace

CodeSchedule build_schedule(const SourceModel& source, const ChannelModel& channel, const EncoderDesign& design,
                            std::size_t horizon, const SimulationOptions& options) {
  const Matrix a = source.a();
  const Matrix h = channel.effective_h();
  const double level = divergence_level(source.q, options.divergence_threshold);
  Matrix p = options.initial_covariance.value_or(default_initial_covariance(source.q));
  if (p.rows() != source.dim() || p.cols() != source.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "initial covariance must be k x k");
  }

  CodeSchedule sched;
  sched.horizon = horizon;
  sched.steps.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    if (!sched.diverged && p.trace() > level) {
      sched.diverged = true;
      sched.diverged_at = t;
    }
    try {
      CodeStep step;
      step.p = p;
      step.gamma_t = effective_gamma(design, p);
      step.encoder_row = encoder_row(design, p);
      step.gain = kalman_gain(a, step.gamma_t, h, channel.r, p);
      step.power = instantaneous_power(step.gamma_t, p);
      if (t + 1 < horizon) p = riccati_update(a, source.q, step.gamma_t, h, channel.r, p);
      sched.steps.push_back(std::move(step));
    } catch (const Error&) {
      // Overflow or loss of definiteness, normally a blown-up covariance (a
      // singular Q in strict mode can also collapse P to zero). The schedule
      // stops here and the run is flagged.
      if (!sched.diverged) {
        sched.diverged = true;
        sched.diverged_at = t;
      }
      break;
    }
  }
  return sched;
}

TrajectoryRecord simulate_trajectory(const SourceModel& source, const ChannelModel& channel,
                                     const EncoderDesign& design, RngState& rng, std::size_t horizon,
                                     const SimulationOptions& options) {
  if (horizon == 0) throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
  const CodeSchedule sched = build_schedule(source, channel, design, horizon, options);
  const Matrix p0 = options.initial_covariance.value_or(source.q);
  const Prepared pr(source, channel, sched, p0, options.gain_perturbation);
  const std::size_t k = source.dim();

  TrajectoryRecord rec;
  rec.squared_error.assign(horizon, kNaN);
  rec.input_power.assign(horizon, kNaN);
  rec.trace_p.assign(horizon, kNaN);
  rec.error.assign(horizon * k, kNaN);
  rec.state.assign(horizon * k, kNaN);
  rec.diverged = sched.diverged;
  rec.diverged_at = sched.diverged_at;
  for (std::size_t t = 0; t < sched.steps.size(); ++t) rec.trace_p[t] = sched.steps[t].p.trace();
  run_replica(pr, rng, [&](std::size_t t, const double* e, double sq, double pw, const double* s) {
    rec.squared_error[t] = sq;
    rec.input_power[t] = pw;
    std::copy_n(e, k, rec.error.begin() + static_cast<std::ptrdiff_t>(t * k));
    std::copy_n(s, k, rec.state.begin() + static_cast<std::ptrdiff_t>(t * k));
  });
  return rec;
}

double SimulationReport::empirical_covariance_trace(std::size_t t) const {
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < dim; ++i) mean_sq += mean_error[t * dim + i] * mean_error[t * dim + i];
  return empirical_mse[t] - mean_sq;
}

SimulationReport monte_carlo(const SourceModel& source, const ChannelModel& channel, const EncoderDesign& design,
                             std::uint64_t seed, std::size_t horizon, std::size_t replicas,
                             const SimulationOptions& options) {
  if (replicas == 0) throw Error(ErrorCode::InvalidArgument, "replicas must be at least 1");
  if (horizon == 0) throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");

  const CodeSchedule sched = build_schedule(source, channel, design, horizon, options);
  // S_0 ~ N(0, Q) unless a starting covariance is imposed.
  const Matrix p0 = options.initial_covariance.value_or(source.q);
  const Prepared pr(source, channel, sched, p0, options.gain_perturbation);
  const std::size_t k = source.dim();

  const std::size_t chunks = (replicas + kChunk - 1) / kChunk;
  std::vector<Accumulator> acc;
  acc.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) acc.emplace_back(horizon, k);

  auto work_on = [&](std::size_t c) {
    Accumulator& a = acc[c];
    const std::size_t end = std::min(replicas, (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      RngState rng(seed, r);
      run_replica(pr, rng, [&](std::size_t t, const double* e, double sq, double pw, const double*) {
        a.sq[t] += sq;
        a.pw[t] += pw;
        for (std::size_t i = 0; i < k; ++i) a.err[t * k + i] += e[i];
      });
    }
  };

  unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) work_on(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) {
      pool.emplace_back([&] {
        for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) work_on(c);
      });
    }
  }

  SimulationReport rep;
  rep.horizon = horizon;
  rep.replicas = replicas;
  rep.seed = seed;
  rep.dim = k;
  rep.diverged = sched.diverged;
  rep.diverged_at = sched.diverged_at;
  rep.trace_p.assign(horizon, kNaN);
  rep.analytic_power.assign(horizon, kNaN);
  rep.empirical_mse.assign(horizon, kNaN);
  rep.empirical_power.assign(horizon, kNaN);
  rep.mean_error.assign(horizon * k, kNaN);
  const double n = static_cast<double>(replicas);
  for (std::size_t t = 0; t < sched.steps.size(); ++t) {
    rep.trace_p[t] = sched.steps[t].p.trace();
    rep.analytic_power[t] = sched.steps[t].power;
    double sq = 0.0, pw = 0.0;
    for (const auto& a : acc) {
      sq += a.sq[t];
      pw += a.pw[t];
    }
    rep.empirical_mse[t] = sq / n;
    rep.empirical_power[t] = pw / n;
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (const auto& a : acc) s += a.err[t * k + i];
      rep.mean_error[t * k + i] = s / n;
    }
  }
  rep.tail_start = horizon - std::max<std::size_t>(1, horizon / 5);
  double d = 0.0, at = 0.0;
  for (std::size_t t = rep.tail_start; t < horizon; ++t) {
    d += rep.empirical_mse[t];
    at += rep.trace_p[t];
  }
  const double window = static_cast<double>(horizon - rep.tail_start);
  rep.d_estimate = d / window;
  rep.analytic_tail = at / window;
  return rep;
}

}  // namespace zdjscc
