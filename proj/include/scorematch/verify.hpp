#pragma once

#include <string>
#include <vector>

namespace scorematch {

struct CheckResult {
  std::string suite;
  std::string name;
  double measured;
  double threshold;
  bool pass;
};

// Suite names: theorem1, debruijn, lemma1, heatpde, adjoint, brook, eq16eq17,
// rm-identity, gradcheck. "all" runs each of them once in that order.
const std::vector<std::string>& suite_names();
bool is_suite(const std::string& name);
std::vector<CheckResult> run_suite(const std::string& name);

}  // namespace scorematch
