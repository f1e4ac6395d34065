#include "zdjscc/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "zdjscc/error.hpp"

namespace zdjscc {

namespace {
constexpr double kVacuous = std::numeric_limits<double>::infinity();
}

Matrix SourceModel::a() const { return block_diag(a_s, a_u()); }

double SourceModel::det_a_u() const noexcept {
  double d = 1.0;
  for (double v : a_u_diag) d *= v;
  return d;
}

SourceModel split_canonical(const Matrix& a, const Matrix& q, double class_tol) {
  if (!a.is_square()) throw Error(ErrorCode::DimensionMismatch, "split_canonical: A not square");
  const std::size_t k = a.rows();
  std::size_t unstable = 0;
  for (const auto& z : eigenvalues(a)) {
    const double m = std::abs(z);
    if (std::abs(m - 1.0) <= class_tol) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("eigenvalue of modulus {:.12g} is on the unit circle", m));
    }
    if (m > 1.0) ++unstable;
  }
  const std::size_t ks = k - unstable;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const bool in_stable = i < ks && j < ks;
      const bool on_unstable_diag = i >= ks && i == j;
      if (!in_stable && !on_unstable_diag && a(i, j) != 0.0) {
        throw Error(ErrorCode::InvalidArgument, "split_canonical: A is not blockdiag(A_s, diag(A_u))");
      }
    }
  SourceModel s{a.block(0, 0, ks, ks), {}, q};
  for (std::size_t i = ks; i < k; ++i) {
    if (std::abs(a(i, i)) <= 1.0 + class_tol) {
      throw Error(ErrorCode::InvalidArgument, "split_canonical: unstable block has a stable diagonal entry");
    }
    s.a_u_diag.push_back(a(i, i));
  }
  return s;
}

const char* to_string(ChannelKind k) noexcept { return k == ChannelKind::MISO ? "MISO" : "SIMO"; }

ChannelModel ChannelModel::miso(Matrix h_row, double noise_var, double power) {
  if (h_row.rows() != 1 || h_row.cols() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "MISO gain must be a 1 x n row");
  }
  return ChannelModel{ChannelKind::MISO, std::move(h_row), Matrix{{noise_var}}, power};
}

ChannelModel ChannelModel::simo(Matrix h_col, Matrix noise_cov, double power) {
  if (h_col.cols() != 1 || h_col.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "SIMO gain must be an m x 1 column");
  }
  if (noise_cov.rows() != h_col.rows() || noise_cov.cols() != h_col.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "SIMO noise covariance must be m x m");
  }
  return ChannelModel{ChannelKind::SIMO, std::move(h_col), std::move(noise_cov), power};
}

Matrix ChannelModel::effective_h() const { return kind == ChannelKind::MISO ? h * h.transpose() : h; }

bool ValidationReport::valid() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

const CheckResult* ValidationReport::find(const std::string& name) const noexcept {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& c : checks) {
    out += fmt::format("  [{}] {:<32} margin={:<12.6g} {}\n", c.passed ? "pass" : "FAIL", c.name, c.margin, c.detail);
  }
  return out;
}

Matrix controllability_gramian(const Matrix& a, const Matrix& q, std::size_t steps) {
  if (!a.is_square() || q.rows() != a.rows() || q.cols() != a.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "controllability_gramian: A and Q must be k x k");
  }
  if (steps < a.rows()) {
    throw Error(ErrorCode::InvalidArgument, "controllability_gramian: steps must be at least k");
  }
  Matrix g = Matrix::zeros(a.rows(), a.rows());
  Matrix term = q;
  for (std::size_t i = 0; i < steps; ++i) {
    g = g + term;
    if (i + 1 < steps) term = a * term * a.transpose();
  }
  return g;
}

ValidationReport validate_model(const SourceModel& source, const ChannelModel& channel, const ModelTolerances& tol) {
  ValidationReport rep;
  auto add = [&](std::string name, bool ok, double margin, std::string detail = {}) {
    rep.checks.push_back(CheckResult{std::move(name), ok, margin, std::move(detail)});
  };

  const std::size_t k = source.dim();
  const bool shapes_ok = source.a_s.is_square() && source.q.rows() == k && source.q.cols() == k && k > 0;
  add("source_shapes", shapes_ok, 0.0,
      shapes_ok ? fmt::format("k = {} ({} stable, {} unstable)", k, source.stable_dim(), source.unstable_dim())
                : fmt::format("A_s {}x{}, Q {}x{}, k = {}", source.a_s.rows(), source.a_s.cols(), source.q.rows(),
                              source.q.cols(), k));
  if (!shapes_ok) return rep;

  // Q must be a covariance.
  try {
    const Definiteness d = psd_check(source.q, 0.0, std::nullopt, tol.linalg);
    add("noise_covariance_psd", d != Definiteness::Indefinite, min_symmetric_eigenvalue(source.q, tol.linalg),
        fmt::format("Q is {}", to_string(d)));
  } catch (const Error& e) {
    add("noise_covariance_psd", false, 0.0, e.what());
  }

  // Eigenvalue classification of the canonical blocks.
  std::vector<std::complex<double>> eigs;
  if (source.stable_dim() > 0) {
    eigs = eigenvalues(source.a_s, tol.linalg);
    double rho = 0.0;
    for (const auto& z : eigs) rho = std::max(rho, std::abs(z));
    const double margin = 1.0 - rho;
    add("stable_block", margin > tol.class_tol, margin, fmt::format("spectral radius of A_s = {:.12g}", rho));
  } else {
    add("stable_block", true, kVacuous, "empty");
  }
  if (source.unstable_dim() > 0) {
    double min_mod = kVacuous;
    for (double v : source.a_u_diag) min_mod = std::min(min_mod, std::abs(v));
    const double margin = min_mod - 1.0;
    add("unstable_block", margin > tol.class_tol, margin, fmt::format("min |lambda_u| = {:.12g}", min_mod));
    double min_gap = kVacuous;
    for (std::size_t i = 0; i < source.unstable_dim(); ++i)
      for (std::size_t j = i + 1; j < source.unstable_dim(); ++j)
        min_gap = std::min(min_gap, std::abs(source.a_u_diag[i] - source.a_u_diag[j]));
    add("unstable_distinct", min_gap > tol.class_tol, min_gap,
        min_gap > tol.class_tol ? "(A_u, 1) controllable" : "repeated unstable eigenvalue; (A_u, 1) not controllable");
  } else {
    add("unstable_block", true, kVacuous, "empty");
    add("unstable_distinct", true, kVacuous, "empty");
  }
  for (double v : source.a_u_diag) eigs.emplace_back(v, 0.0);

  double min_prod = kVacuous;
  for (const auto& li : eigs)
    for (const auto& lj : eigs) min_prod = std::min(min_prod, std::abs(1.0 - li * lj));
  add("assumption2_eigen_products", min_prod > tol.class_tol, min_prod, "min |1 - lambda_i lambda_j|");

  // Controllability via the k-step Gramian.
  try {
    const Matrix a = source.a();
    const Matrix g = controllability_gramian(a, source.q, k);
    const double thresh = tol.gramian_rel * g.trace() / static_cast<double>(k);
    const bool pd = g.trace() > 0.0 && psd_check(g, 0.0, thresh, tol.linalg) == Definiteness::PD;
    add("assumption1_controllable", pd, min_symmetric_eigenvalue(g, tol.linalg),
        fmt::format("{}-step Gramian min eigenvalue, threshold {:.3g}", k, thresh));
  } catch (const Error& e) {
    add("assumption1_controllable", false, 0.0, e.what());
  }
  add("assumption3_time_invariant", true, kVacuous, "encoder direction is constant by construction");
  add("assumption4_diagonal_unstable", true, kVacuous, "A_u supplied as a diagonal");

  // Channel.
  if (channel.kind == ChannelKind::MISO) {
    const bool shape = channel.h.rows() == 1 && channel.h.cols() >= 1 && channel.r.rows() == 1 && channel.r.cols() == 1;
    add("channel_shapes", shape, 0.0, fmt::format("H {}x{}", channel.h.rows(), channel.h.cols()));
    if (shape) {
      const double dev = std::abs(channel.h.frobenius_norm() - 1.0);
      add("channel_gain_norm", dev <= tol.gain_norm_tol, dev, "| ||H|| - 1 |");
      add("noise_positive", channel.noise_var() > 0.0, channel.noise_var(), "r");
    }
  } else {
    const std::size_t m = channel.h.rows();
    const bool shape = channel.h.cols() == 1 && m >= 1 && channel.r.rows() == m && channel.r.cols() == m;
    add("channel_shapes", shape, 0.0, fmt::format("H {}x{}, R {}x{}", m, channel.h.cols(), channel.r.rows(), channel.r.cols()));
    if (shape) {
      try {
        const Definiteness d = psd_check(channel.r, 0.0, std::nullopt, tol.linalg);
        add("noise_positive", d == Definiteness::PD, min_symmetric_eigenvalue(channel.r, tol.linalg),
            fmt::format("R is {}", to_string(d)));
      } catch (const Error& e) {
        add("noise_positive", false, 0.0, e.what());
      }
    }
  }
  add("power_nonnegative", std::isfinite(channel.power) && channel.power >= 0.0, channel.power, "p");
  return rep;
}

}  // namespace zdjscc
