#include "scorematch/scalespace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scorematch/error.hpp"
#include "scorematch/objectives.hpp"
#include "scorematch/operators.hpp"

namespace scorematch {

namespace {

constexpr double kKernelWidth = 8.0;
constexpr double kDenominatorGuard = 1e-12;

std::vector<double> gaussian_kernel(double t, double h, std::size_t half) {
  std::vector<double> k(2 * half + 1);
  double total = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) {
    const double x = (static_cast<double>(j) - static_cast<double>(half)) * h;
    k[j] = std::exp(-x * x / (2.0 * t));
    total += k[j];
  }
  for (double& v : k) v /= total;
  return k;
}

// Convolves every line along axis a with the kernel, zero outside the box.
std::vector<double> convolve_axis(const GridGeometry& grid, std::span<const double> f, std::size_t a,
                                  std::span<const double> kernel) {
  const std::size_t n = grid.axis(a).n;
  const std::size_t stride = grid.stride(a);
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  std::vector<double> out(f.size(), 0.0);
  std::vector<double> line(n);
  for (std::size_t base = 0; base < f.size(); ++base) {
    if (grid.axis_index(base, a) != 0) continue;
    for (std::size_t k = 0; k < n; ++k) line[k] = f[base + k * stride];
    for (std::size_t k = 0; k < n; ++k) {
      const auto kk = static_cast<std::ptrdiff_t>(k);
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, kk - half);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, kk + half);
      double s = 0.0;
      for (std::ptrdiff_t j = lo; j <= hi; ++j) s += kernel[static_cast<std::size_t>(j - kk + half)] * line[j];
      out[base + k * stride] = s;
    }
  }
  return out;
}

bool is_interior(const GridGeometry& grid, std::size_t idx) {
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const std::size_t k = grid.axis_index(idx, a);
    if (k == 0 || k + 1 == grid.axis(a).n) return false;
  }
  return true;
}

}  // namespace

GridDensity smooth(const GridDensity& p, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidParams("smoothing scale t must be finite and >= 0");
  if (t == 0.0) return p;
  const GridGeometry& grid = p.geometry();
  const double radius = kKernelWidth * std::sqrt(t);
  std::vector<double> values = p.values();
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const Axis& axis = grid.axis(a);
    if (radius > axis.hi - axis.lo) {
      throw ShapeError("smoothing kernel (8 sqrt(t) = " + std::to_string(radius) + ") is wider than the box");
    }
    const double h = axis.spacing();
    const auto half = static_cast<std::size_t>(std::ceil(radius / h));
    const auto kernel = gaussian_kernel(t, h, half);
    values = convolve_axis(grid, values, a, kernel);
  }
  return GridDensity(grid, std::move(values));
}

double heat_pde_residual(const GridDensity& p, double t, double dt) {
  if (!(dt > 0.0) || !(t > dt)) throw InvalidParams("heat PDE residual needs t > dt > 0");
  const GridDensity before = smooth(p, t - dt);
  const GridDensity now = smooth(p, t);
  const GridDensity after = smooth(p, t + dt);
  const GridGeometry& grid = p.geometry();
  const auto lap = grid_laplacian(grid, now.values());
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!is_interior(grid, k)) continue;
    const double r = (after[k] - before[k]) / (2.0 * dt) - 0.5 * lap[k];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double entropy(const GridDensity& p) {
  std::vector<double> integrand(p.size(), 0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) integrand[k] = -p[k] * std::log(p[k]);
  }
  return p.geometry().integrate(integrand);
}

double fisher_information(const GridDensity& p) {
  const GridGeometry& grid = p.geometry();
  const VectorTable score = apply(OperatorKind::Gradient, grid, p.log_values());
  const auto mask = p.mass_mask();
  std::vector<double> integrand(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!mask[k]) continue;
    double s = 0.0;
    for (std::size_t a = 0; a < grid.dim(); ++a) s += score[a][k] * score[a][k];
    integrand[k] = p[k] * s;
  }
  return grid.integrate(integrand);
}

std::vector<double> parse_t_grid(const std::string& spec) {
  const auto c1 = spec.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : spec.find(':', c1 + 1);
  if (c2 == std::string::npos || spec.find(':', c2 + 1) != std::string::npos) {
    throw InvalidParams("t-grid must look like lo:hi:step, got '" + spec + "'");
  }
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
  try {
    std::size_t used = 0;
    const std::string a = spec.substr(0, c1);
    const std::string b = spec.substr(c1 + 1, c2 - c1 - 1);
    const std::string c = spec.substr(c2 + 1);
    lo = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    hi = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
    step = std::stod(c, &used);
    if (used != c.size()) throw std::invalid_argument(c);
  } catch (const std::logic_error&) {
    throw InvalidParams("t-grid must look like lo:hi:step, got '" + spec + "'");
  }
  if (!(step > 0.0) || !(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
    throw InvalidParams("t-grid needs 0 <= lo <= hi and step > 0, got '" + spec + "'");
  }
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = lo + static_cast<double>(k) * step;
  return grid;
}

void require_increasing(std::span<const double> t_grid) {
  if (t_grid.empty()) throw InvalidParams("t-grid is empty");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] >= 0.0) || !std::isfinite(t_grid[k])) throw InvalidParams("t-grid values must be finite and >= 0");
    if (k > 0 && !(t_grid[k] > t_grid[k - 1])) throw InvalidParams("t-grid must be strictly increasing");
  }
}

std::vector<std::optional<double>> central_derivative(std::span<const double> t, std::span<const double> f) {
  if (t.size() != f.size()) throw ShapeError("derivative abscissae and values differ in length");
  std::vector<std::optional<double>> out(t.size());
  for (std::size_t k = 1; k + 1 < t.size(); ++k) {
    const double h1 = t[k] - t[k - 1];
    const double h2 = t[k + 1] - t[k];
    out[k] = -h2 / (h1 * (h1 + h2)) * f[k - 1] + (h2 - h1) / (h1 * h2) * f[k] + h1 / (h2 * (h1 + h2)) * f[k + 1];
  }
  return out;
}

DivergenceCurve divergence_curve(const GridDensity& p, const GridDensity& q, std::span<const double> t_grid) {
  if (!(p.geometry() == q.geometry())) throw ShapeError("divergence curve needs p and q on the same grid");
  require_increasing(t_grid);
  DivergenceCurve curve;
  std::vector<double> kl;
  for (double t : t_grid) {
    const GridDensity pt = smooth(p, t);
    const GridDensity qt = smooth(q, t);
    curve.push_back({t, kl_exact(pt, qt), fisher_exact(pt, qt), std::nullopt});
    kl.push_back(curve.back().kl);
  }
  const auto d = central_derivative(t_grid, kl);
  for (std::size_t k = 0; k < curve.size(); ++k) curve[k].dkl_dt = d[k];
  return curve;
}

double theorem1_residual(const DivergenceCurve& curve) {
  double worst = 0.0;
  std::size_t used = 0;
  for (const CurvePoint& pt : curve) {
    if (!pt.dkl_dt) continue;
    worst = std::max(worst, std::abs(*pt.dkl_dt + 0.5 * pt.fisher) / std::max(pt.fisher, kDenominatorGuard));
    ++used;
  }
  if (used < 3) throw InvalidParams("curve needs at least 3 interior points");
  return worst;
}

EntropyCurve entropy_curve(const GridDensity& p, std::span<const double> t_grid) {
  require_increasing(t_grid);
  EntropyCurve curve;
  std::vector<double> h;
  for (double t : t_grid) {
    const GridDensity pt = smooth(p, t);
    curve.push_back({t, entropy(pt), fisher_information(pt), std::nullopt});
    h.push_back(curve.back().entropy);
  }
  const auto d = central_derivative(t_grid, h);
  for (std::size_t k = 0; k < curve.size(); ++k) curve[k].dh_dt = d[k];
  return curve;
}

double debruijn_residual(const EntropyCurve& curve) {
  double worst = 0.0;
  std::size_t used = 0;
  for (const EntropyPoint& pt : curve) {
    if (!pt.dh_dt) continue;
    const double j = pt.fisher_information;
    worst = std::max(worst, std::abs(*pt.dh_dt - 0.5 * j) / std::max(j, kDenominatorGuard));
    ++used;
  }
  if (used < 3) throw InvalidParams("curve needs at least 3 interior points");
  return worst;
}

double debruijn_residual(const GridDensity& p, std::span<const double> t_grid) {
  return debruijn_residual(entropy_curve(p, t_grid));
}

double lemma1_residual(const GridDensity& f) {
  const GridGeometry& grid = f.geometry();
  const auto logf = f.log_values();
  const auto lap_f = grid_laplacian(grid, f.values());
  const auto lap_log = grid_laplacian(grid, logf);
  const VectorTable grad_log = apply(OperatorKind::Gradient, grid, logf);
  const double peak = f.peak();
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!is_interior(grid, k)) continue;
    double g2 = 0.0;
    for (std::size_t a = 0; a < grid.dim(); ++a) g2 += grad_log[a][k] * grad_log[a][k];
    // f * (lap f / f - lap log f - |grad log f|^2) / max f
    const double r = (lap_f[k] - f[k] * (lap_log[k] + g2)) / peak;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace scorematch
