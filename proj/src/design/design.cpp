#include "zdjscc/design/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "zdjscc/error.hpp"
#include "zdjscc/matlib/linalg.hpp"

namespace zdjscc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

#if defined(__SIZEOF_FLOAT128__) && (defined(__x86_64__) || defined(__i386__))
using wide = __float128;
#else
using wide = long double;
#endif

// M_ij = 1 / (1 - x_i x_j) with x = 1 / lambda: the entrywise solution of the
// diagonal Stein equation.
std::vector<wide> wide_m(const std::vector<double>& a_u_diag) {
  const std::size_t n = a_u_diag.size();
  std::vector<wide> m(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const wide xi = wide(1) / wide(a_u_diag[i]);
      const wide xj = wide(1) / wide(a_u_diag[j]);
      m[i * n + j] = wide(1) / (wide(1) - xi * xj);
    }
  return m;
}

wide wide_abs(wide x) { return x < 0 ? -x : x; }

Matrix ones(std::size_t rows, std::size_t cols) { return Matrix::filled(rows, cols, 1.0); }

Matrix inverse_diag(const std::vector<double>& d) {
  std::vector<double> inv(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) inv[i] = 1.0 / d[i];
  return Matrix::diagonal(inv);
}

// Q - G^T G / p + A G^T G A^T / (p (1 + s)).
Matrix reduced_forcing(const Matrix& a, const Matrix& q, const Matrix& gamma, double p, double snr) {
  if (gamma.max_abs() == 0.0) return q;
  if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "reduced J equation needs p > 0 for a nonzero Gamma");
  const Matrix gg = gamma.transpose() * gamma;
  return q - gg / p + a * gg * a.transpose() / (p * (1.0 + snr));
}

// J_uu - J_us J_ss^{-1} J_su (J_uu itself when the stable block is empty).
Matrix schur_complement(const Matrix& j_ss, const Matrix& j_su, const Matrix& j_uu) {
  if (j_ss.rows() == 0) return j_uu;
  return (j_uu - j_su.transpose() * lu_solve(j_ss, j_su)).symmetrized();
}

}  // namespace

CapacityInfo effective_snr_capacity(const ChannelModel& channel) {
  CapacityInfo c;
  const double p = channel.power;
  if (channel.kind == ChannelKind::MISO) {
    const double r = channel.noise_var();
    c.snr = p / r;
    c.noise_equivalent = r;
    const double hh = (channel.h * channel.h.transpose())(0, 0);
    c.nats_logdet = 0.5 * std::log((r + p * hh) / r);
  } else {
    const Matrix rinv_h = lu_solve(channel.r, channel.h);
    const double gain = (channel.h.transpose() * rinv_h)(0, 0);
    c.snr = p * gain;
    c.noise_equivalent = gain > 0.0 ? 1.0 / gain : kInf;
    const Matrix widened = channel.r + p * channel.h * channel.h.transpose();
    c.nats_logdet = 0.5 * std::log(determinant(widened) / determinant(channel.r));
  }
  c.nats = 0.5 * std::log1p(c.snr);
  c.bits = c.nats / std::numbers::ln2;
  return c;
}

double log_instability(const SourceModel& source) {
  double sum = 0.0;
  for (const auto& z : eigenvalues(source.a())) sum += std::log(std::max(1.0, std::abs(z)));
  return sum;
}

Feasibility feasibility_check(const SourceModel& source, const ChannelModel& channel) {
  const double s = effective_snr_capacity(channel).snr;
  const double det = source.det_a_u();
  Feasibility f;
  f.margin = (1.0 + s) - det * det;
  f.feasible = source.unstable_dim() == 0 || f.margin > 0.0;
  return f;
}

const char* to_string(DareStatus s) noexcept {
  switch (s) {
    case DareStatus::Converged: return "Converged";
    case DareStatus::Diverged: return "Diverged";
    case DareStatus::Oscillating: return "Oscillating";
  }
  return "?";
}

DareResult dare_fixed_point(const SourceModel& source, const ChannelModel& channel, const EncoderDesign& design,
                            const DareOptions& options) {
  const Matrix a = source.a();
  const Matrix h = channel.effective_h();
  const double tq = source.q.trace();
  const double level = tq > 0.0 ? options.divergence_threshold * tq : options.divergence_threshold;

  DareResult res;
  res.p = options.p0.value_or(default_initial_covariance(source.q));
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    Matrix next = riccati_step(a, source.q, design, h, channel.r, res.p);
    res.iterations = it;
    if (next.trace() > level) {
      res.status = DareStatus::Diverged;
      res.blowup_at = it;
      res.p = std::move(next);
      return res;
    }
    const double step = max_abs_diff(next, res.p);
    const bool done = step <= options.tol * (1.0 + res.p.max_abs());
    res.p = std::move(next);
    if (done) {
      res.status = DareStatus::Converged;
      res.achieved_power = instantaneous_power(effective_gamma(design, res.p), res.p);
      return res;
    }
  }
  res.status = DareStatus::Oscillating;
  return res;
}

std::vector<double> scalar_strict_fixed_points(double a, double q, double r, double gamma_sq) {
  const double c2 = (1.0 - a * a) * r;
  const double c1 = gamma_sq - q * r;
  const double c0 = -q * gamma_sq;
  std::vector<double> roots;
  if (c2 == 0.0) {
    if (c1 != 0.0) roots.push_back(-c0 / c1);
  } else {
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // Numerically stable pair.
      const double qq = -0.5 * (c1 + std::copysign(sq, c1));
      if (qq != 0.0) {
        roots.push_back(qq / c2);
        roots.push_back(c0 / qq);
      } else {
        roots.push_back(0.0);
      }
    }
  }
  std::erase_if(roots, [](double x) { return !(x > 0.0); });
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

Matrix solve_m(const std::vector<double>& a_u_diag) {
  for (double v : a_u_diag) {
    if (!(std::abs(v) > 1.0)) throw Error(ErrorCode::InvalidArgument, "solve_m: every |lambda| must exceed 1");
  }
  const Matrix inv = inverse_diag(a_u_diag);
  const std::size_t n = a_u_diag.size();
  return stein_solve(inv, inv, ones(n, n));
}

Matrix m_reference(const std::vector<double>& a_u_diag) {
  const std::size_t n = a_u_diag.size();
  const auto m = wide_m(a_u_diag);
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n * n; ++i) out[i] = static_cast<double>(m[i]);
  return Matrix(n, n, std::move(out));
}

double m_quadratic_form(const std::vector<double>& a_u_diag) {
  for (double v : a_u_diag) {
    if (!(std::abs(v) > 1.0)) throw Error(ErrorCode::InvalidArgument, "M needs every |lambda| > 1");
  }
  const std::size_t n = a_u_diag.size();
  auto m = wide_m(a_u_diag);
  std::vector<wide> y(n, wide(1));
  // Gaussian elimination with partial pivoting.
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (wide_abs(m[r * n + c]) > wide_abs(m[piv * n + c])) piv = r;
    if (m[piv * n + c] == wide(0)) throw Error(ErrorCode::SingularMatrix, "M is singular");
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m[c * n + j], m[piv * n + j]);
      std::swap(y[c], y[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const wide f = m[r * n + c] / m[c * n + c];
      for (std::size_t j = c; j < n; ++j) m[r * n + j] -= f * m[c * n + j];
      y[r] -= f * y[c];
    }
  }
  wide total = 0;
  for (std::size_t c = n; c-- > 0;) {
    wide acc = y[c];
    for (std::size_t j = c + 1; j < n; ++j) acc -= m[c * n + j] * y[j];
    y[c] = acc / m[c * n + c];
    total += y[c];
  }
  return static_cast<double>(total);
}

Matrix reduced_j_solve(const SourceModel& source, const ChannelModel& channel, const Matrix& gamma) {
  const std::size_t k = source.dim();
  if (gamma.rows() != 1 || gamma.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, fmt::format("Gamma must be 1x{}", k));
  }
  const Matrix a = source.a();
  const double s = effective_snr_capacity(channel).snr;
  return stein_solve(a, a, reduced_forcing(a, source.q, gamma, channel.power, s));
}

Matrix tilde_j_closed_form(const std::vector<double>& a_u_diag, const std::vector<double>& d_u, double p, double r) {
  const std::size_t n = a_u_diag.size();
  if (d_u.size() != n) throw Error(ErrorCode::DimensionMismatch, "D_u must match A_u");
  const Matrix d = Matrix::diagonal(d_u);
  const Matrix m = solve_m(a_u_diag);
  const Matrix n_mat = (std::isinf(r) ? Matrix(n, n) : m / (r + p)) - ones(n, n) / p;
  return d * n_mat * d;
}

Matrix tilde_j_direct(const std::vector<double>& a_u_diag, const std::vector<double>& d_u, double p, double r) {
  const std::size_t n = a_u_diag.size();
  if (d_u.size() != n) throw Error(ErrorCode::DimensionMismatch, "D_u must match A_u");
  const Matrix inv = inverse_diag(a_u_diag);
  const Matrix d = Matrix::diagonal(d_u);
  const Matrix avec = Matrix::column(inv.diag());
  const double snr = std::isinf(r) ? 0.0 : p / r;
  const Matrix forcing = d * (avec * avec.transpose() / p - ones(n, n) / (p * (1.0 + snr))) * d;
  return stein_solve(inv, inv, forcing);
}

Matrix hat_j_solve(const std::vector<double>& a_u_diag, const Matrix& q_uu) {
  const Matrix inv = inverse_diag(a_u_diag);
  return stein_solve(inv, inv, -(inv * q_uu * inv));
}

DesignResult design_gamma(const SourceModel& source, const ChannelModel& channel, const DesignOptions& options) {
  const std::size_t k = source.dim();
  const std::size_t ks = source.stable_dim();
  const std::size_t ku = source.unstable_dim();
  const CapacityInfo cap = effective_snr_capacity(channel);
  const Feasibility feas = feasibility_check(source, channel);
  const double p = channel.power;

  DesignCertificate c;
  c.a = source.a();
  c.q = source.q;
  c.a_u_diag = source.a_u_diag;
  c.stable_dim = ks;
  c.power = p;
  c.snr = cap.snr;
  c.noise_equivalent = cap.noise_equivalent;
  c.capacity_margin = feas.margin;
  c.schur_margin = kInf;

  const Matrix q_ss = source.q.block(0, 0, ks, ks);
  const Matrix q_su = source.q.block(0, ks, ks, ku);
  const Matrix q_uu = source.q.block(ks, ks, ku, ku);
  c.j_ss = stein_solve(source.a_s, source.a_s, q_ss);

  auto finish = [&](double alpha) {
    std::vector<double> g(k, 0.0);
    for (std::size_t i = ks; i < k; ++i) g[i] = alpha;
    c.alpha = alpha;
    c.gamma = Matrix::row(g);
    if (ku > 0 && alpha > 0.0) {
      c.j_tilde_uu = (alpha * alpha) * c.n;
      c.j_uu = c.j_hat_uu + c.j_tilde_uu;
    } else if (ku > 0) {
      c.j_tilde_uu = Matrix(ku, ku);
      c.j_uu = stein_solve(source.a_u(), source.a_u(), q_uu);
    }
    if (ku > 0) c.schur_margin = min_symmetric_eigenvalue(schur_complement(c.j_ss, c.j_su, c.j_uu));
    c.j = assemble(c.j_ss, c.j_su, c.j_su.transpose(), c.j_uu);
  };

  if (ku == 0) {
    c.j_su = Matrix(ks, 0);
    c.j_uu = Matrix(0, 0);
    c.j_hat_uu = c.j_tilde_uu = c.m = c.n = Matrix(0, 0);
    finish(0.0);
    c.feasible = psd_check(c.j_ss) == Definiteness::PD;
    if (!c.feasible) c.violated = "J_ss is not positive definite";
    return {EncoderDesign{c.gamma, options.mode, p}, c};
  }

  c.m = solve_m(source.a_u_diag);
  c.j_su = stein_solve(source.a_s, source.a_u(), q_su);
  c.j_hat_uu = hat_j_solve(source.a_u_diag, q_uu);

  if (!(p > 0.0)) {
    c.n = Matrix(0, 0);
    finish(0.0);
    c.feasible = false;
    c.violated = "no transmit power for an unstable source";
    return {EncoderDesign{c.gamma, options.mode, p}, c};
  }
  const Matrix ones_uu = ones(ku, ku);
  c.n = (std::isinf(cap.noise_equivalent) ? Matrix(ku, ku) : c.m / (cap.noise_equivalent + p)) - ones_uu / p;

  if (!feas.feasible) {
    finish(1.0);
    c.feasible = false;
    c.violated = fmt::format("capacity condition 1 + s > (det A_u)^2 fails (margin {:.6g}); N is {}", feas.margin,
                             to_string(psd_check(c.n)));
    return {EncoderDesign{c.gamma, options.mode, p}, c};
  }

  const Matrix base = schur_complement(c.j_ss, c.j_su, c.j_hat_uu);
  auto passes = [&](double alpha) {
    return psd_check((base + (alpha * alpha) * c.n).symmetrized()) != Definiteness::Indefinite;
  };
  double lo = 0.0;
  double hi = 1.0;
  if (passes(hi)) {
    int halvings = 0;
    while (halvings < options.max_doublings && passes(hi / 2.0)) {
      hi /= 2.0;
      ++halvings;
    }
    lo = halvings < options.max_doublings ? hi / 2.0 : 0.0;
  } else {
    int doublings = 0;
    while (!passes(hi)) {
      if (++doublings > options.max_doublings) {
        throw Error(ErrorCode::CertificateFailure,
                    fmt::format("no alpha up to 2^{} certifies a feasible model (margin {:.6g})",
                                options.max_doublings, feas.margin));
      }
      hi *= 2.0;
    }
    lo = hi / 2.0;
  }
  while (lo > 0.0 && hi - lo > options.bisection_rel * hi) {
    const double mid = 0.5 * (lo + hi);
    (passes(mid) ? hi : lo) = mid;
  }

  finish(hi * (1.0 + options.alpha_margin));
  const bool ss_ok = ks == 0 || psd_check(c.j_ss) == Definiteness::PD;
  const bool schur_ok = psd_check(schur_complement(c.j_ss, c.j_su, c.j_uu)) != Definiteness::Indefinite;
  c.feasible = ss_ok && schur_ok;
  if (!ss_ok) c.violated = "J_ss is not positive definite";
  else if (!schur_ok) c.violated = "Schur complement J_uu - J_us J_ss^-1 J_su is indefinite";
  return {EncoderDesign{c.gamma, options.mode, p}, c};
}

ValidationReport certificate_check(const DesignCertificate& c) {
  ValidationReport rep;
  auto add = [&](std::string name, bool ok, double margin, std::string detail = {}) {
    rep.checks.push_back(CheckResult{std::move(name), ok, margin, std::move(detail)});
  };
  const std::size_t ks = c.stable_dim;
  const std::size_t ku = c.a_u_diag.size();

  try {
    const Matrix w = reduced_forcing(c.a, c.q, c.gamma, c.power, c.snr);
    const double res = stein_residual(c.a, c.a, w, c.j);
    const double bound = 1e-9 * (1.0 + w.max_abs());
    add("reduced_lyapunov_residual", res <= bound, res, fmt::format("bound {:.3g}", bound));
  } catch (const Error& e) {
    add("reduced_lyapunov_residual", false, kInf, e.what());
  }

  if (ks == 0) {
    add("j_ss_pd", true, kInf, "empty stable block");
  } else {
    const Definiteness d = psd_check(c.j_ss);
    add("j_ss_pd", d == Definiteness::PD, min_symmetric_eigenvalue(c.j_ss), fmt::format("J_ss is {}", to_string(d)));
  }

  if (ku == 0) {
    add("schur_complement_psd", true, kInf, "empty unstable block");
  } else {
    try {
      const Matrix s = schur_complement(c.j_ss, c.j_su, c.j_uu);
      const Definiteness d = psd_check(s);
      add("schur_complement_psd", d != Definiteness::Indefinite, min_symmetric_eigenvalue(s),
          ks == 0 ? fmt::format("J_uu is {}", to_string(d)) : fmt::format("Schur complement is {}", to_string(d)));
    } catch (const Error& e) {
      add("schur_complement_psd", false, -kInf, e.what());
    }
  }

  if (ku == 0) {
    add("m_identity", true, kInf, "empty unstable block");
  } else {
    double det = 1.0;
    for (double v : c.a_u_diag) det *= v;
    const Matrix ref = m_reference(c.a_u_diag);
    const double entry_err = max_abs_diff(c.m, ref) / std::max(1.0, ref.max_abs());
    const double lhs = m_quadratic_form(c.a_u_diag);
    const double rhs = 1.0 - 1.0 / (det * det);
    const double err = std::abs(lhs - rhs);
    add("m_identity", err <= 1e-8 && entry_err <= 1e-12, err,
        fmt::format("1^T M^-1 1 = {:.12g}, 1 - |det A_u|^-2 = {:.12g}, M entry error {:.2g}", lhs, rhs, entry_err));
  }

  if (ku == 0 || !(c.power > 0.0) || c.alpha == 0.0) {
    add("tilde_j_closed_form", true, kInf, "no unstable transmission");
  } else {
    const std::vector<double> d_u(ku, c.alpha);
    const Matrix direct = tilde_j_direct(c.a_u_diag, d_u, c.power, c.noise_equivalent);
    const Matrix closed = tilde_j_closed_form(c.a_u_diag, d_u, c.power, c.noise_equivalent);
    const double scale = std::max(1.0, direct.max_abs());
    const double err = std::max(max_abs_diff(direct, closed), max_abs_diff(direct, c.j_tilde_uu)) / scale;
    add("tilde_j_closed_form", err <= 1e-8, err, "relative difference to the direct Stein solve");
  }

  add("capacity_condition", ku == 0 || c.capacity_margin > 0.0, c.capacity_margin, "(1 + s) - (det A_u)^2");
  return rep;
}

}  // namespace zdjscc
