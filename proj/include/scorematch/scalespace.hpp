#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scorematch/grid.hpp"

namespace scorematch {

struct CurvePoint {
  double t;
  double kl;
  double fisher;
  std::optional<double> dkl_dt;
};

using DivergenceCurve = std::vector<CurvePoint>;

struct EntropyPoint {
  double t;
  double entropy;
  double fisher_information;
  std::optional<double> dh_dt;
};

using EntropyCurve = std::vector<EntropyPoint>;

// Heat-kernel smoothing: density of x + sqrt(t) w. Direct convolution with the
// sampled Gaussian kernel truncated at 8 sqrt(t) and renormalized; separable in 2-D.
GridDensity smooth(const GridDensity& p, double t);

// max over interior nodes of |(p_{t+dt} - p_{t-dt}) / (2 dt) - lap(p_t) / 2|.
double heat_pde_residual(const GridDensity& p, double t, double dt);

// -integral p log p.
double entropy(const GridDensity& p);
// integral p |grad log p|^2 over mass nodes.
double fisher_information(const GridDensity& p);

// "lo:hi:step" -> lo + k step for every k with lo + k step <= hi (within 1e-9 step).
std::vector<double> parse_t_grid(const std::string& spec);
void require_increasing(std::span<const double> t_grid);

// Three-point derivative on a nonuniform grid; empty at the two endpoints.
std::vector<std::optional<double>> central_derivative(std::span<const double> t, std::span<const double> f);

DivergenceCurve divergence_curve(const GridDensity& p, const GridDensity& q, std::span<const double> t_grid);

// max over interior t of |dkl_dt + fisher / 2| / max(fisher, 1e-12).
double theorem1_residual(const DivergenceCurve& curve);

EntropyCurve entropy_curve(const GridDensity& p, std::span<const double> t_grid);
// max over interior t of |dH/dt - J / 2| / max(J, 1e-12).
double debruijn_residual(const EntropyCurve& curve);
double debruijn_residual(const GridDensity& p, std::span<const double> t_grid);

// Pointwise residual of lap f / f = lap log f + |grad log f|^2 with grid
// stencils, multiplied through by f / max f, max over interior nodes.
double lemma1_residual(const GridDensity& f);

}  // namespace scorematch
