#include "scorematch/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

#include "scorematch/error.hpp"

namespace scorematch::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string header_for(std::size_t d) {
  std::string h;
  for (std::size_t a = 0; a < d; ++a) h += (a ? ",x" : "x") + std::to_string(a);
  return h;
}

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ShapeError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ShapeError(std::string("unknown key '") + key + "' in " + what);
  }
}

template <class T>
T get_field(const nlohmann::json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw ShapeError(std::string("missing key '") + key + "' in " + what);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ShapeError(std::string("key '") + key + "' in " + what + " has the wrong type");
  }
}

void dump_into(const nlohmann::json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad + nlohmann::json(key).dump() + ": ";
        dump_into(value, out, indent + 2);
      }
      out += "\n" + std::string(static_cast<std::size_t>(indent), ' ') + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      out += "[";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ", ";
        dump_into(j[k], out, indent);
      }
      out += "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      // JSON has no literal for non-finite numbers.
      out += std::isfinite(v) ? format_real(v) : nlohmann::json(format_real(v)).dump();
      return;
    }
    default: out += j.dump(); return;
  }
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) { out << dataset_csv(data); }

std::string dataset_csv(const Dataset& data) {
  std::string s = header_for(data.dim()) + "\n";
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (std::size_t a = 0; a < data.dim(); ++a) {
      if (a) s += ',';
      s += data.is_discrete() ? std::to_string(data.symbol_row(n)[a]) : format_real(data.real_row(n)[a]);
    }
    s += '\n';
  }
  return s;
}

Dataset read_dataset_csv(std::istream& in, DataKind kind, int m) {
  if (kind == DataKind::Discrete && m < 2) throw ShapeError("discrete dataset needs an alphabet size >= 2");
  std::string line;
  if (!std::getline(in, line)) throw ShapeError("dataset file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = split(line, ',');
  const std::size_t d = head.size();
  if (line != header_for(d)) throw ShapeError("dataset header must be x0,x1,...; got '" + line + "'");

  std::vector<double> reals;
  std::vector<int> symbols;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != d) {
      throw ShapeError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(d));
    }
    for (const std::string& f : fields) {
      const char* first = f.data();
      const char* last = f.data() + f.size();
      if (kind == DataKind::Discrete) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || v < 0 || v >= m) {
          throw ShapeError("row " + std::to_string(row) + ": '" + f + "' is not a symbol in 0.." + std::to_string(m - 1));
        }
        symbols.push_back(v);
      } else {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
          throw ShapeError("row " + std::to_string(row) + ": '" + f + "' is not a finite real");
        }
        reals.push_back(v);
      }
    }
  }
  return kind == DataKind::Discrete ? Dataset::discrete(d, m, std::move(symbols))
                                    : Dataset::continuous(d, std::move(reals));
}

nlohmann::json model_to_json(const Model& model) {
  nlohmann::json j;
  j["kind"] = to_string(model.kind());
  j["dim"] = model.dim();
  if (model.alphabet_size()) j["alphabet_size"] = *model.alphabet_size();
  j["params"] = model.params();
  j["layout"] = model.layout();
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  constexpr const char* what = "model file";
  require_keys(j, {"kind", "dim", "alphabet_size", "params", "layout"}, what);
  const ModelKind kind = model_kind_from_string(get_field<std::string>(j, "kind", what));
  const auto dim = get_field<std::size_t>(j, "dim", what);
  auto params = get_field<std::vector<double>>(j, "params", what);
  const auto layout = get_field<std::string>(j, "layout", what);
  const bool has_m = j.contains("alphabet_size");

  auto expect_layout = [&](const std::string& expected) {
    if (layout != expected) throw ShapeError("layout '" + layout + "' does not match kind (expected '" + expected + "')");
  };
  auto topology = [&]() {
    const std::string prefix = "fields+";
    if (layout.rfind(prefix, 0) != 0) throw ShapeError("discrete layout must start with 'fields+', got '" + layout + "'");
    return layout.substr(prefix.size());
  };

  switch (kind) {
    case ModelKind::Gaussian:
      if (has_m) throw ShapeError("alphabet_size is only valid for discrete models");
      expect_layout("mean+cov_lower");
      return Model::gaussian(dim, std::move(params));
    case ModelKind::GenGauss1D:
      if (has_m) throw ShapeError("alphabet_size is only valid for discrete models");
      expect_layout("loc+rate+shape");
      if (dim != 1) throw ShapeError("gengauss1d has dim 1");
      if (params.size() != 3) throw ShapeError("gengauss1d needs 3 parameters (loc, rate, shape)");
      return Model::gen_gauss_1d(params[0], params[1], params[2]);
    case ModelKind::Ising:
      if (has_m && get_field<int>(j, "alphabet_size", what) != 2) throw ShapeError("ising alphabet_size must be 2");
      return Model::ising(dim, topology(), std::move(params));
    case ModelKind::Potts:
      if (!has_m) throw ShapeError("potts model needs alphabet_size");
      return Model::potts(dim, get_field<int>(j, "alphabet_size", what), topology(), std::move(params));
  }
  throw KindMismatch("unknown model kind");
}

nlohmann::json joint_to_json(const DiscreteJoint& joint) {
  nlohmann::json j;
  j["m"] = joint.m();
  j["d"] = joint.d();
  j["probs"] = joint.probs();
  return j;
}

DiscreteJoint joint_from_json(const nlohmann::json& j) {
  constexpr const char* what = "joint table";
  require_keys(j, {"m", "d", "probs"}, what);
  return DiscreteJoint(get_field<int>(j, "m", what), get_field<std::size_t>(j, "d", what),
                       get_field<std::vector<double>>(j, "probs", what));
}

nlohmann::json objective_record(ObjectiveKind kind, std::span<const double> theta, const ObjectiveValue& v) {
  nlohmann::json j;
  j["objective"] = to_string(kind);
  j["theta"] = std::vector<double>(theta.begin(), theta.end());
  j["value"] = v.value;
  if (v.grad_theta) j["grad"] = *v.grad_theta;
  return j;
}

nlohmann::json fit_result_json(const FitResult& r, std::optional<std::uint64_t> seed_of_data) {
  nlohmann::json j;
  j["theta_hat"] = r.theta_hat;
  j["objective"] = to_string(r.objective);
  j["value"] = r.objective_value;
  j["grad_norm"] = r.grad_norm;
  j["iters"] = r.iters;
  j["converged"] = r.converged;
  j["seed_of_data"] = seed_of_data ? nlohmann::json(*seed_of_data) : nlohmann::json(nullptr);
  return j;
}

std::string curve_csv(const DivergenceCurve& curve) {
  std::string s = "t,kl,fisher,dkl_dt\n";
  for (const CurvePoint& p : curve) {
    s += format_real(p.t) + ',' + format_real(p.kl) + ',' + format_real(p.fisher) + ',';
    if (p.dkl_dt) s += format_real(*p.dkl_dt);
    s += '\n';
  }
  return s;
}

std::string comparison_csv(std::span<const ComparisonRow> rows) {
  std::string s = "objective,n,seed,converged,iters,linf_error,objective_value,grad_norm\n";
  for (const ComparisonRow& r : rows) {
    s += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(r.objective), r.n ? std::to_string(*r.n) : "inf",
                     r.seed ? std::to_string(*r.seed) : "", r.converged ? "true" : "false", r.iters,
                     format_real(r.linf_error), format_real(r.objective_value), format_real(r.grad_norm));
  }
  return s;
}

std::string dump(const nlohmann::json& j) {
  std::string out;
  dump_into(j, out, 0);
  return out + "\n";
}

void write_output(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content << std::flush;
    return;
  }
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move output into place at '" + path + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace scorematch::io
