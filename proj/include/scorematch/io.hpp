#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scorematch/dataset.hpp"
#include "scorematch/discrete_joint.hpp"
#include "scorematch/estimation.hpp"
#include "scorematch/models.hpp"
#include "scorematch/objectives.hpp"
#include "scorematch/scalespace.hpp"

namespace scorematch::io {

// Shortest round-trip text for a double ("%.17g"); never fewer than 15 significant digits.
std::string format_real(double v);

// CSV: header x0,...,x{d-1}; one sample per row.
void write_dataset_csv(std::ostream& out, const Dataset& data);
std::string dataset_csv(const Dataset& data);
// Reads a dataset of the given kind; `m` is required for discrete data.
Dataset read_dataset_csv(std::istream& in, DataKind kind, int m = 0);

// {"kind", "dim", "alphabet_size"?, "params", "layout"}; unknown keys are rejected.
nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

// {"m", "d", "probs"} with row-major state indexing, coordinate 0 slowest.
nlohmann::json joint_to_json(const DiscreteJoint& joint);
DiscreteJoint joint_from_json(const nlohmann::json& j);

// {"objective", "theta", "value", "grad"?}
nlohmann::json objective_record(ObjectiveKind kind, std::span<const double> theta, const ObjectiveValue& v);

// {"theta_hat", "objective", "value", "grad_norm", "iters", "converged", "seed_of_data"}
// seed_of_data is null when the dataset did not come from a seeded draw.
nlohmann::json fit_result_json(const FitResult& r, std::optional<std::uint64_t> seed_of_data);

// Header t,kl,fisher,dkl_dt (empty field where dkl_dt is absent).
std::string curve_csv(const DivergenceCurve& curve);

// Header objective,n,seed,converged,iters,linf_error,objective_value,grad_norm.
// Population rows carry n = inf and an empty seed.
std::string comparison_csv(std::span<const ComparisonRow> rows);

// JSON text with every double printed via format_real, keys sorted, two-space indent.
std::string dump(const nlohmann::json& j);

// Writes to a temporary sibling file and renames it over `path`; "-" writes to stdout.
void write_output(const std::string& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace scorematch::io
