#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "scorematch/density_spec.hpp"
#include "scorematch/error.hpp"
#include "scorematch/estimation.hpp"
#include "scorematch/io.hpp"
#include "scorematch/models.hpp"
#include "scorematch/objectives.hpp"
#include "scorematch/scalespace.hpp"
#include "scorematch/verify.hpp"

namespace sm = scorematch;

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

struct Optimizer {
  std::size_t max_iters = sm::OptimizerConfig{}.max_iters;
  double grad_tol = sm::OptimizerConfig{}.grad_tol;
  double initial_step = sm::OptimizerConfig{}.initial_step;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--max-iters", max_iters, "Iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--grad-tol", grad_tol, "Stop when the gradient max-norm falls below this")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--initial-step", initial_step, "First trial step of the line search")->check(CLI::PositiveNumber);
  }
  sm::OptimizerConfig config() const {
    sm::OptimizerConfig cfg;
    cfg.max_iters = max_iters;
    cfg.grad_tol = grad_tol;
    cfg.initial_step = initial_step;
    return cfg;
  }
};

sm::Model load_model(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(sm::io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw sm::ShapeError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return sm::io::model_from_json(j);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
    v = std::stoull(s, &used);
  } catch (const std::logic_error&) {
    throw sm::InvalidParams(fmt::format("bad {} '{}'", what, s));
  }
  if (used != s.size()) throw sm::InvalidParams(fmt::format("bad {} '{}'", what, s));
  return v;
}

// "1..5" or "1,2,3".
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const auto lo = parse_u64(s.substr(0, dots), "seed");
    const auto hi = parse_u64(s.substr(dots + 2), "seed");
    if (hi < lo) throw sm::InvalidParams("seed range '" + s + "' is empty");
    for (auto k = lo; k <= hi; ++k) seeds.push_back(k);
  } else {
    for (const auto& part : split(s, ',')) seeds.push_back(parse_u64(part, "seed"));
  }
  if (seeds.empty()) throw sm::InvalidParams("no seeds given");
  return seeds;
}

int cmd_generate(const std::string& model_path, std::size_t n, std::uint64_t seed, const std::string& out) {
  const sm::Model model = load_model(model_path);
  const sm::Dataset data = sm::sample(model, n, seed);
  sm::io::write_output(out, sm::io::dataset_csv(data));
  std::cerr << "seed " << seed << "\n";
  return 0;
}

int cmd_fit(const std::string& model_path, const std::string& objective, const std::string& data_path,
            const std::string& p_model_path, std::optional<std::uint64_t> data_seed, const std::string& init,
            const Optimizer& opt, const std::string& out) {
  const sm::Model model = load_model(model_path);
  const sm::ObjectiveKind kind = sm::objective_kind_from_string(objective);
  sm::require_compatible(kind, model);

  std::optional<sm::Dataset> data;
  if (data_path == "enumerate") {
    if (p_model_path.empty()) throw sm::InvalidParams("--data enumerate needs --p-model");
    const sm::Model p_model = load_model(p_model_path);
    if (!p_model.is_discrete()) throw sm::KindMismatch("--data enumerate needs a discrete --p-model");
    data = sm::enumerate_states(sm::exact_joint(p_model));
    data_seed.reset();
  } else {
    if (!p_model_path.empty()) throw sm::InvalidParams("--p-model is only used with --data enumerate");
    std::istringstream in(sm::io::read_file(data_path));
    data = model.is_discrete() ? sm::io::read_dataset_csv(in, sm::DataKind::Discrete, *model.alphabet_size())
                               : sm::io::read_dataset_csv(in, sm::DataKind::Continuous);
  }

  sm::OptimizerConfig cfg = opt.config();
  if (init == "model") cfg.init_theta = model.params();
  const sm::FitResult r = sm::fit(model, kind, *data, cfg);
  sm::io::write_output(out, sm::io::dump(sm::io::fit_result_json(r, data_seed)));
  return 0;
}

int cmd_compare(const std::string& model_path, const std::string& objectives, const std::string& n_list,
                const std::string& seeds, const Optimizer& opt, const std::string& out) {
  const sm::Model truth = load_model(model_path);
  std::vector<sm::ObjectiveKind> kinds;
  for (const auto& tag : split(objectives, ',')) kinds.push_back(sm::objective_kind_from_string(tag));
  std::vector<std::size_t> ns;
  for (const auto& part : split(n_list, ',')) ns.push_back(parse_u64(part, "sample size"));
  const auto seed_list = parse_seeds(seeds);
  const auto rows = sm::compare_estimators(truth, ns, seed_list, kinds, opt.config());
  sm::io::write_output(out, sm::io::comparison_csv(rows));
  return 0;
}

int cmd_scalespace(const std::string& p_spec, const std::string& q_spec, const std::string& t_spec, std::size_t n,
                   const std::string& box, const std::string& out) {
  const auto p = sm::InlineDensity::parse(p_spec);
  const auto q = sm::InlineDensity::parse(q_spec);
  const auto t = sm::parse_t_grid(t_spec);
  sm::require_increasing(t);
  sm::Axis axis = sm::default_axis({p, q}, t.back(), n);
  if (!box.empty()) {
    const auto parts = split(box, ':');
    if (parts.size() != 2) throw sm::InvalidParams("--box must look like lo:hi");
    try {
      axis.lo = std::stod(parts[0]);
      axis.hi = std::stod(parts[1]);
    } catch (const std::logic_error&) {
      throw sm::InvalidParams("--box must look like lo:hi");
    }
  }
  const sm::GridDensity pg = sm::discretize(p, axis);
  const sm::GridDensity qg = sm::discretize(q, axis);
  pg.require_decay();
  qg.require_decay();
  sm::io::write_output(out, sm::io::curve_csv(sm::divergence_curve(pg, qg, t)));
  return 0;
}

int cmd_verify(const std::string& suite) {
  if (!sm::is_suite(suite)) throw sm::InvalidParams("unknown suite '" + suite + "'");
  const auto checks = sm::run_suite(suite);
  for (const auto& c : checks) {
    std::cout << fmt::format("{} {}: {} measured={} threshold={}\n", c.pass ? "PASS" : "FAIL", c.suite, c.name,
                             sm::io::format_real(c.measured), sm::io::format_real(c.threshold));
  }
  // One summary line per suite, in run order.
  bool all_pass = true;
  for (const auto& name : sm::suite_names()) {
    std::size_t total = 0, failed = 0;
    for (const auto& c : checks) {
      if (c.suite != name) continue;
      ++total;
      failed += c.pass ? 0 : 1;
    }
    if (total == 0) continue;
    std::cout << fmt::format("SUITE {} {} ({} checks, {} failed)\n", name, failed == 0 ? "PASS" : "FAIL", total, failed);
    all_pass = all_pass && failed == 0;
  }
  return all_pass ? 0 : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score matching, ratio matching and scale-space toolkit"};
  app.require_subcommand(1);

  std::string model_path, out, objective, data_path = "", p_model_path, init = "zeros";
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> data_seed;
  Optimizer opt;

  auto* gen = app.add_subcommand("generate", "Draw a seeded dataset from a model file");
  gen->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--n", n, "Number of samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Sampler seed");
  gen->add_option("--out", out, "Output CSV, - for stdout")->required();

  auto* fit = app.add_subcommand("fit", "Fit a model by minimizing an objective");
  fit->add_option("--model", model_path, "Model JSON (family and layout)")->required()->check(CLI::ExistingFile);
  fit->add_option("--objective", objective, "sm, gsm, rm, pl or mle")->required();
  fit->add_option("--data", data_path, "Dataset CSV, or 'enumerate' for the population fit")->required();
  fit->add_option("--p-model", p_model_path, "Model whose exact joint weights the enumeration");
  fit->add_option("--data-seed", data_seed, "Seed that produced the dataset, echoed in the result");
  fit->add_option("--init", init, "Start from zeros (family default) or the model file parameters")
      ->check(CLI::IsMember({"zeros", "model"}));
  fit->add_option("--out", out, "Output JSON, - for stdout")->required();
  opt.add_to(fit);

  std::string objectives = "gsm,rm,pl,mle", n_list = "1000,10000,50000", seeds = "1..5";
  auto* cmp = app.add_subcommand("compare", "Compare estimators across sample sizes and seeds");
  cmp->add_option("--model", model_path, "Model JSON holding the true parameters")->required()->check(CLI::ExistingFile);
  cmp->add_option("--objectives", objectives, "Comma-separated objective tags");
  cmp->add_option("--n", n_list, "Comma-separated sample sizes");
  cmp->add_option("--seeds", seeds, "Seed range a..b or comma-separated list");
  cmp->add_option("--out", out, "Output CSV, - for stdout")->required();
  opt.add_to(cmp);

  std::string p_spec, q_spec, t_spec = "0.02:1:0.02", box;
  std::size_t grid_n = 4096;
  auto* ss = app.add_subcommand("scalespace", "KL and Fisher divergence along the heat scale space");
  ss->add_option("--p", p_spec, "gauss:mu:var or mix:w,mu,var;...")->required();
  ss->add_option("--q", q_spec, "gauss:mu:var or mix:w,mu,var;...")->required();
  ss->add_option("--t", t_spec, "Scale grid lo:hi:step");
  ss->add_option("--n", grid_n, "Grid nodes")->check(CLI::Range(std::size_t{3}, std::size_t{1} << 22));
  ss->add_option("--box", box, "Grid box lo:hi (default: +-8 sd after smoothing)");
  ss->add_option("--out", out, "Output CSV, - for stdout")->required();

  std::string suite;
  auto* ver = app.add_subcommand("verify", "Run a numerical identity suite");
  ver->add_option("--suite", suite, "theorem1, debruijn, lemma1, heatpde, adjoint, brook, eq16eq17, rm-identity, "
                                    "gradcheck or all")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(model_path, n, seed, out);
    if (fit->parsed()) return cmd_fit(model_path, objective, data_path, p_model_path, data_seed, init, opt, out);
    if (cmp->parsed()) return cmd_compare(model_path, objectives, n_list, seeds, opt, out);
    if (ss->parsed()) return cmd_scalespace(p_spec, q_spec, t_spec, grid_n, box, out);
    if (ver->parsed()) return cmd_verify(suite);
  } catch (const sm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
