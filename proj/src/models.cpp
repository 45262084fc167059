#include "scorematch/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "scorematch/error.hpp"
#include "scorematch/rng.hpp"
#include "scorematch/summation.hpp"

namespace scorematch {

namespace {

double spin(int symbol) { return symbol == 0 ? -1.0 : 1.0; }

std::size_t tri_size(std::size_t d) { return d * (d + 1) / 2; }

std::size_t parse_index(const std::string& s, const std::string& topology) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    throw ShapeError("bad vertex '" + s + "' in topology '" + topology + "'");
  }
  if (pos != s.size()) throw ShapeError("bad vertex '" + s + "' in topology '" + topology + "'");
  return static_cast<std::size_t>(v);
}

// log sum exp with max subtraction and pairwise reduction.
double log_sum_exp(std::span<const double> logs) {
  const double mx = *std::max_element(logs.begin(), logs.end());
  std::vector<double> e(logs.size());
  for (std::size_t k = 0; k < logs.size(); ++k) e[k] = std::exp(logs[k] - mx);
  return mx + std::log(pairwise_sum(e));
}

}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Gaussian: return "gaussian";
    case ModelKind::Ising: return "ising";
    case ModelKind::Potts: return "potts";
    case ModelKind::GenGauss1D: return "gengauss1d";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "gaussian") return ModelKind::Gaussian;
  if (name == "ising") return ModelKind::Ising;
  if (name == "potts") return ModelKind::Potts;
  if (name == "gengauss1d") return ModelKind::GenGauss1D;
  throw KindMismatch("unknown model kind '" + name + "'");
}

std::vector<Edge> parse_topology(const std::string& topology, std::size_t dim) {
  std::vector<Edge> edges;
  if (topology == "none") {
  } else if (topology == "chain") {
    for (std::size_t i = 0; i + 1 < dim; ++i) edges.push_back({i, i + 1});
  } else if (topology == "complete") {
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i + 1; j < dim; ++j) edges.push_back({i, j});
  } else if (topology.rfind("grid:", 0) == 0) {
    const std::string dims = topology.substr(5);
    const auto x = dims.find('x');
    if (x == std::string::npos) throw ShapeError("grid topology must be grid:RxC");
    const std::size_t rows = parse_index(dims.substr(0, x), topology);
    const std::size_t cols = parse_index(dims.substr(x + 1), topology);
    if (rows * cols != dim) throw ShapeError("grid topology " + dims + " does not have " + std::to_string(dim) + " sites");
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t v = r * cols + c;
        if (c + 1 < cols) edges.push_back({v, v + 1});
        if (r + 1 < rows) edges.push_back({v, v + cols});
      }
    }
  } else if (topology.rfind("edges:", 0) == 0) {
    std::stringstream ss(topology.substr(6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto dash = item.find('-');
      if (dash == std::string::npos) throw ShapeError("edge '" + item + "' must be i-j");
      std::size_t a = parse_index(item.substr(0, dash), topology);
      std::size_t b = parse_index(item.substr(dash + 1), topology);
      if (a == b || a >= dim || b >= dim) throw ShapeError("edge '" + item + "' out of range or a self-loop");
      if (a > b) std::swap(a, b);
      edges.push_back({a, b});
    }
  } else {
    throw ShapeError("unknown topology '" + topology + "'");
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) { return l.i != r.i ? l.i < r.i : l.j < r.j; });
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) throw ShapeError("duplicate edge in topology");
  return edges;
}

Model Model::gaussian(std::size_t dim, std::vector<double> params) {
  Model m;
  m.kind_ = ModelKind::Gaussian;
  m.dim_ = dim;
  m.params_ = std::move(params);
  m.validate_and_cache();
  return m;
}

Model Model::gaussian(std::span<const double> mean, const Eigen::MatrixXd& cov) {
  const std::size_t d = mean.size();
  if (static_cast<std::size_t>(cov.rows()) != d || static_cast<std::size_t>(cov.cols()) != d)
    throw ShapeError("covariance shape does not match mean");
  std::vector<double> params(mean.begin(), mean.end());
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c <= r; ++c) params.push_back(cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
  return gaussian(d, std::move(params));
}

Model Model::ising(std::size_t dim, const std::string& topology, std::vector<double> params) {
  Model m;
  m.kind_ = ModelKind::Ising;
  m.dim_ = dim;
  m.m_ = 2;
  m.topology_ = topology;
  m.edges_ = parse_topology(topology, dim);
  m.params_ = std::move(params);
  m.validate_and_cache();
  return m;
}

Model Model::potts(std::size_t dim, int alphabet, const std::string& topology, std::vector<double> params) {
  if (alphabet < 2) throw ShapeError("Potts alphabet size must be at least 2");
  Model m;
  m.kind_ = ModelKind::Potts;
  m.dim_ = dim;
  m.m_ = alphabet;
  m.topology_ = topology;
  m.edges_ = parse_topology(topology, dim);
  m.params_ = std::move(params);
  m.validate_and_cache();
  return m;
}

Model Model::gen_gauss_1d(double loc, double rate, double shape) {
  Model m;
  m.kind_ = ModelKind::GenGauss1D;
  m.dim_ = 1;
  m.params_ = {loc, rate, shape};
  m.validate_and_cache();
  // Box where the exponent reaches 60, i.e. q~ below e^-60 of the mode.
  const double half = std::pow(60.0 / rate, 1.0 / shape) + 1.0;
  m.box_ = std::vector<Axis>{{loc - half, loc + half, 4096}};
  return m;
}

Model Model::with_params(std::span<const double> params) const {
  Model m = *this;
  m.params_.assign(params.begin(), params.end());
  m.validate_and_cache();
  return m;
}

Model Model::with_log_offset(double offset) const {
  Model m = *this;
  m.log_offset_ = offset;
  return m;
}

Model Model::with_quadrature_box(std::vector<Axis> box) const {
  if (is_discrete()) throw KindMismatch("quadrature box given for a discrete model");
  if (box.size() != dim_) throw ShapeError("quadrature box dimension does not match model");
  GridGeometry check(box);  // validates axes
  Model m = *this;
  m.box_ = std::move(box);
  return m;
}

std::optional<int> Model::alphabet_size() const {
  if (is_discrete()) return m_;
  return std::nullopt;
}

std::string Model::layout() const {
  switch (kind_) {
    case ModelKind::Gaussian: return "mean+cov_lower";
    case ModelKind::Ising:
    case ModelKind::Potts: return "fields+" + topology_;
    case ModelKind::GenGauss1D: return "loc+rate+shape";
  }
  return "";
}

void Model::validate_and_cache() {
  if (dim_ == 0) throw ShapeError("model dimension must be positive");
  for (double v : params_) {
    if (!std::isfinite(v)) throw InvalidParams("parameter vector contains a non-finite entry");
  }
  std::size_t expected = 0;
  switch (kind_) {
    case ModelKind::Gaussian: expected = dim_ + tri_size(dim_); break;
    case ModelKind::Ising: expected = dim_ + edges_.size(); break;
    case ModelKind::Potts: expected = dim_ * static_cast<std::size_t>(m_ - 1) + edges_.size(); break;
    case ModelKind::GenGauss1D: expected = 3; break;
  }
  if (params_.size() != expected) {
    throw InvalidParams(std::string(to_string(kind_)) + " model expects " + std::to_string(expected) +
                        " parameters, got " + std::to_string(params_.size()));
  }

  if (kind_ == ModelKind::Gaussian) {
    const auto d = static_cast<Eigen::Index>(dim_);
    cov_.resize(d, d);
    std::size_t k = dim_;
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) {
        cov_(r, c) = params_[k];
        cov_(c, r) = params_[k];
        ++k;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (llt.info() != Eigen::Success) throw InvalidParams("covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    log_det_ = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!(L(i, i) > 0.0)) throw InvalidParams("covariance is not positive definite");
      log_det_ += 2.0 * std::log(L(i, i));
    }
    precision_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
    precision_ = 0.5 * (precision_ + precision_.transpose());
  } else if (kind_ == ModelKind::GenGauss1D) {
    if (!(params_[1] > 0.0)) throw InvalidParams("GenGauss1D rate must be positive");
    if (!(params_[2] > 0.0)) throw InvalidParams("GenGauss1D shape must be positive");
  } else {
    incident_.assign(dim_, {});
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      incident_[edges_[e].i].push_back({e, edges_[e].j});
      incident_[edges_[e].j].push_back({e, edges_[e].i});
    }
  }
}

void Model::check_point(std::span<const double> x) const {
  if (is_discrete()) throw KindMismatch(std::string("continuous point given to discrete model ") + to_string(kind_));
  if (x.size() != dim_) throw ShapeError("point dimension " + std::to_string(x.size()) + " != model dimension " + std::to_string(dim_));
}

void Model::check_point(std::span<const int> x) const {
  if (!is_discrete()) throw KindMismatch(std::string("discrete point given to continuous model ") + to_string(kind_));
  if (x.size() != dim_) throw ShapeError("point dimension " + std::to_string(x.size()) + " != model dimension " + std::to_string(dim_));
  for (int v : x) {
    if (v < 0 || v >= m_) throw ShapeError("symbol " + std::to_string(v) + " outside alphabet of size " + std::to_string(m_));
  }
}

const Eigen::MatrixXd& Model::precision() const {
  if (kind_ != ModelKind::Gaussian) throw KindMismatch("precision() requires a Gaussian model");
  return precision_;
}

Eigen::VectorXd Model::mean() const {
  if (kind_ != ModelKind::Gaussian) throw KindMismatch("mean() requires a Gaussian model");
  return Eigen::Map<const Eigen::VectorXd>(params_.data(), static_cast<Eigen::Index>(dim_));
}

double Model::log_unnorm(std::span<const double> x) const {
  check_point(x);
  if (kind_ == ModelKind::Gaussian) {
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(dim_)) - mean();
    return -0.5 * r.dot(precision_ * r) + log_offset_;
  }
  const double r = x[0] - params_[0];
  return -params_[1] * std::pow(r * r + kGenGaussEps * kGenGaussEps, 0.5 * params_[2]) + log_offset_;
}

double Model::log_unnorm(std::span<const int> x) const {
  check_point(x);
  double s = 0.0;
  if (kind_ == ModelKind::Ising) {
    for (std::size_t i = 0; i < dim_; ++i) s += params_[i] * spin(x[i]);
    for (std::size_t e = 0; e < edges_.size(); ++e) s += params_[dim_ + e] * spin(x[edges_[e].i]) * spin(x[edges_[e].j]);
  } else {
    const auto stride = static_cast<std::size_t>(m_ - 1);
    for (std::size_t i = 0; i < dim_; ++i) {
      if (x[i] > 0) s += params_[i * stride + static_cast<std::size_t>(x[i] - 1)];
    }
    const std::size_t base = dim_ * stride;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      if (x[edges_[e].i] == x[edges_[e].j]) s += params_[base + e];
    }
  }
  return s + log_offset_;
}

std::vector<double> Model::grad_x_log(std::span<const double> x) const {
  check_point(x);
  if (kind_ == ModelKind::Gaussian) {
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(dim_)) - mean();
    const Eigen::VectorXd g = -(precision_ * r);
    return {g.data(), g.data() + g.size()};
  }
  const double r = x[0] - params_[0];
  const double u = r * r + kGenGaussEps * kGenGaussEps;
  const double rate = params_[1];
  const double shape = params_[2];
  return {-rate * shape * r * std::pow(u, 0.5 * shape - 1.0)};
}

double Model::laplacian_x_log(std::span<const double> x) const {
  check_point(x);
  if (kind_ == ModelKind::Gaussian) return -precision_.trace();
  const double r = x[0] - params_[0];
  const double u = r * r + kGenGaussEps * kGenGaussEps;
  const double rate = params_[1];
  const double shape = params_[2];
  return -rate * shape * std::pow(u, 0.5 * shape - 2.0) * (u + (shape - 2.0) * r * r);
}

LocalFeatures Model::local_features(std::span<const int> x, std::size_t i) const {
  check_point(x);
  if (i >= dim_) throw ShapeError("coordinate index out of range");
  LocalFeatures lf;
  const auto m = static_cast<std::size_t>(m_);
  const auto& inc = incident_[i];
  if (kind_ == ModelKind::Ising) {
    lf.index.push_back(i);
    for (const auto& [e, other] : inc) lf.index.push_back(dim_ + e);
    const std::size_t K = lf.index.size();
    lf.value.resize(m * K);
    for (int xi = 0; xi < m_; ++xi) {
      double* row = lf.value.data() + static_cast<std::size_t>(xi) * K;
      row[0] = spin(xi);
      for (std::size_t k = 0; k < inc.size(); ++k) row[k + 1] = spin(xi) * spin(x[inc[k].second]);
    }
  } else {
    const std::size_t stride = m - 1;
    for (std::size_t a = 1; a < m; ++a) lf.index.push_back(i * stride + a - 1);
    const std::size_t base = dim_ * stride;
    for (const auto& [e, other] : inc) lf.index.push_back(base + e);
    const std::size_t K = lf.index.size();
    lf.value.assign(m * K, 0.0);
    for (int xi = 0; xi < m_; ++xi) {
      double* row = lf.value.data() + static_cast<std::size_t>(xi) * K;
      if (xi > 0) row[static_cast<std::size_t>(xi) - 1] = 1.0;
      for (std::size_t k = 0; k < inc.size(); ++k) row[stride + k] = (xi == x[inc[k].second]) ? 1.0 : 0.0;
    }
  }
  return lf;
}

std::vector<double> Model::singleton_conditional(std::span<const int> x, std::size_t i) const {
  if (!is_discrete()) throw KindMismatch(std::string("singleton conditionals need a discrete model, got ") + to_string(kind_));
  if (i >= dim_) throw ShapeError("coordinate index out of range");
  const LocalFeatures lf = local_features(x, i);
  const std::size_t K = lf.width();
  const auto m = static_cast<std::size_t>(m_);
  std::vector<double> logits(m, 0.0);
  for (std::size_t xi = 0; xi < m; ++xi) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += params_[lf.index[k]] * lf.value[xi * K + k];
    logits[xi] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> q(m);
  for (std::size_t xi = 0; xi < m; ++xi) q[xi] = std::exp(logits[xi] - mx);
  const double z = pairwise_sum(q);
  for (double& v : q) v = std::max(v / z, kConditionalFloor);
  return q;
}

std::vector<double> Model::features(std::span<const int> x) const {
  check_point(x);
  std::vector<double> phi(params_.size(), 0.0);
  if (kind_ == ModelKind::Ising) {
    for (std::size_t i = 0; i < dim_; ++i) phi[i] = spin(x[i]);
    for (std::size_t e = 0; e < edges_.size(); ++e) phi[dim_ + e] = spin(x[edges_[e].i]) * spin(x[edges_[e].j]);
  } else {
    const auto stride = static_cast<std::size_t>(m_ - 1);
    for (std::size_t i = 0; i < dim_; ++i) {
      if (x[i] > 0) phi[i * stride + static_cast<std::size_t>(x[i] - 1)] = 1.0;
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) phi[dim_ * stride + e] = (x[edges_[e].i] == x[edges_[e].j]) ? 1.0 : 0.0;
  }
  return phi;
}

DiscreteJoint exact_joint(const Model& model) {
  if (!model.is_discrete()) throw KindMismatch(std::string("exact_joint needs a discrete model, got ") + to_string(model.kind()));
  const int m = *model.alphabet_size();
  const std::uint64_t n = state_count(m, model.dim());
  std::vector<double> logs(n);
  std::vector<int> x(model.dim());
  for (std::uint64_t idx = 0; idx < n; ++idx) {
    decode_state(idx, m, x);
    logs[idx] = model.log_unnorm(std::span<const int>(x));
  }
  const double lz = log_sum_exp(logs);
  std::vector<double> probs(n);
  for (std::uint64_t idx = 0; idx < n; ++idx) probs[idx] = std::exp(logs[idx] - lz);
  return DiscreteJoint::from_weights(m, model.dim(), std::move(probs));
}

GridDensity exact_grid(const Model& model) {
  if (model.is_discrete()) throw KindMismatch("exact_grid needs a continuous model");
  if (!model.quadrature_box()) throw ShapeError("quadrature box missing for continuous normalization");
  if (model.dim() > 2) throw CapacityError("quadrature normalization supports 1-D and 2-D models only");
  GridGeometry geom(*model.quadrature_box());
  std::vector<double> logs = geom.sample([&](std::span<const double> x) { return model.log_unnorm(x); });
  const double mx = *std::max_element(logs.begin(), logs.end());
  for (double& v : logs) v = std::exp(v - mx);
  return GridDensity(std::move(geom), std::move(logs));
}

NormalizedDensity exact_normalize(const Model& model) {
  if (model.is_discrete()) return exact_joint(model);
  return exact_grid(model);
}

double log_partition(const Model& model) {
  if (model.is_discrete()) {
    const int m = *model.alphabet_size();
    const std::uint64_t n = state_count(m, model.dim());
    std::vector<double> logs(n);
    std::vector<int> x(model.dim());
    for (std::uint64_t idx = 0; idx < n; ++idx) {
      decode_state(idx, m, x);
      logs[idx] = model.log_unnorm(std::span<const int>(x));
    }
    return log_sum_exp(logs);
  }
  if (model.kind() == ModelKind::Gaussian) {
    return 0.5 * static_cast<double>(model.dim()) * std::log(2.0 * std::numbers::pi) + 0.5 * model.log_det_cov() +
           model.log_offset();
  }
  if (!model.quadrature_box()) throw ShapeError("quadrature box missing for continuous normalization");
  GridGeometry geom(*model.quadrature_box());
  std::vector<double> logs = geom.sample([&](std::span<const double> x) { return model.log_unnorm(x); });
  const double mx = *std::max_element(logs.begin(), logs.end());
  for (double& v : logs) v = std::exp(v - mx);
  return mx + std::log(geom.integrate(logs));
}

Dataset sample(const Model& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ShapeError("sample count must be at least 1");
  Rng rng(seed);
  const std::size_t d = model.dim();

  if (model.kind() == ModelKind::Gaussian) {
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(model.covariance()).matrixL();
    const Eigen::VectorXd mu = model.mean();
    std::vector<double> values(n * d);
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (std::size_t s = 0; s < n; ++s) {
      for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.normal();
      const Eigen::VectorXd x = mu + L * z;
      for (std::size_t k = 0; k < d; ++k) values[s * d + k] = x(static_cast<Eigen::Index>(k));
    }
    return Dataset::continuous(d, std::move(values), seed);
  }

  if (model.is_discrete()) {
    const DiscreteJoint joint = exact_joint(model);
    std::vector<double> cdf(joint.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < joint.size(); ++k) cdf[k] = (acc += joint[k]);
    const int m = joint.m();
    std::vector<int> values(n * d);
    for (std::size_t s = 0; s < n; ++s) {
      const double u = rng.uniform() * cdf.back();
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      if (it == cdf.end()) --it;
      decode_state(static_cast<std::uint64_t>(it - cdf.begin()), m, std::span<int>(values.data() + s * d, d));
    }
    return Dataset::discrete(d, m, std::move(values), seed);
  }

  // GenGauss1D: inverse CDF of the trapezoid-integrated density, linear within cells.
  const GridDensity grid = exact_grid(model);
  const Axis& ax = grid.geometry().axis(0);
  const double h = ax.spacing();
  std::vector<double> cdf(ax.n, 0.0);
  for (std::size_t k = 1; k < ax.n; ++k) cdf[k] = cdf[k - 1] + 0.5 * h * (grid[k - 1] + grid[k]);
  std::vector<double> values(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), 1, ax.n - 1);
    const double span = cdf[k] - cdf[k - 1];
    const double frac = span > 0.0 ? (u - cdf[k - 1]) / span : 0.5;
    values[s] = ax.coord(k - 1) + frac * h;
  }
  return Dataset::continuous(1, std::move(values), seed);
}

Dataset enumerate_states(const DiscreteJoint& joint) {
  const std::size_t d = joint.d();
  std::vector<int> values(joint.size() * d);
  for (std::size_t idx = 0; idx < joint.size(); ++idx) decode_state(idx, joint.m(), std::span<int>(values.data() + idx * d, d));
  return Dataset::discrete(d, joint.m(), std::move(values)).with_weights(joint.probs());
}

}  // namespace scorematch
