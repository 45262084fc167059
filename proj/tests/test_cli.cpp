#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "scorematch/io.hpp"

namespace fs = std::filesystem;
using namespace scorematch;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

class Sandbox {
 public:
  Sandbox() : dir_(fs::temp_directory_path() / ("scorematch_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(dir_);
    put("ising2.json", R"({"kind":"ising","dim":2,"params":[0.2,-0.1,0.6],"layout":"fields+chain"})");
    put("ising4.json", R"({"kind":"ising","dim":4,"params":[0,0,0,0,0.5,0.5,0.5],"layout":"fields+chain"})");
    put("gauss2.json",
        R"({"kind":"gaussian","dim":2,"params":[1.0,-0.5,2.0,0.4,1.0],"layout":"mean+cov_lower"})");
  }
  ~Sandbox() { fs::remove_all(dir_); }

  void put(const std::string& name, const std::string& text) const { std::ofstream(dir_ / name) << text; }
  std::string get(const std::string& name) const { return io::read_file(dir_ / name); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Run run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" SCOREMATCH_CLI "' " + args + " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, get("stdout.txt"), get("stderr.txt")};
  }

 private:
  fs::path dir_;
};

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("generate") {
  Sandbox box;
  REQUIRE(box.run("generate --model ising2.json --n 1000 --seed 7 --out d.csv").code == 0);
  const std::string first = box.get("d.csv");
  CHECK(count_lines(first) == 1001);
  CHECK(first.rfind("x0,x1\n", 0) == 0);
  CHECK(box.run("generate --model ising2.json --n 1000 --seed 7 --out d2.csv").err.find("7") != std::string::npos);
  CHECK(box.get("d2.csv") == first);
  REQUIRE(box.run("generate --model ising2.json --n 1000 --seed 8 --out d3.csv").code == 0);
  CHECK(box.get("d3.csv") != first);
  const Run to_stdout = box.run("generate --model ising2.json --n 1000 --seed 7 --out -");
  CHECK(to_stdout.out == first);

  CHECK(box.run("generate --model ising2.json --n 0 --out x.csv").code == 2);
  CHECK(box.run("generate --model missing.json --n 5 --out x.csv").code == 2);
  CHECK(box.run("generate --model ising2.json --n 5").code == 2);
  CHECK(box.run("").code == 2);
  CHECK(box.run("frobnicate").code == 2);
  box.put("typo.json", R"({"kind":"ising","dim":2,"params":[0,0,0],"layout":"fields+chain","sead":1})");
  const Run typo = box.run("generate --model typo.json --n 5 --out x.csv");
  CHECK(typo.code == 2);
  CHECK(typo.err.find("sead") != std::string::npos);
}

TEST_CASE("fit") {
  Sandbox box;
  SUBCASE("gaussian score matching equals the sample moments") {
    REQUIRE(box.run("generate --model gauss2.json --n 500 --seed 3 --out g.csv").code == 0);
    REQUIRE(box.run("fit --model gauss2.json --objective sm --data g.csv --data-seed 3 --out fit.json").code == 0);
    const auto res = nlohmann::json::parse(box.get("fit.json"));
    std::istringstream in(box.get("g.csv"));
    const auto mom = oracle::moments(io::read_dataset_csv(in, DataKind::Continuous).reals(), 2);
    const auto theta = res["theta_hat"].get<std::vector<double>>();
    for (std::size_t k = 0; k < mom.size(); ++k) CHECK(std::abs(theta[k] - mom[k]) < 1e-6);
    CHECK(res["objective"] == "sm");
    CHECK(res["converged"] == true);
    CHECK(res["seed_of_data"] == 3);
    for (const char* key : {"value", "grad_norm", "iters"}) CHECK(res.contains(key));

    REQUIRE(box.run("fit --model gauss2.json --objective sm --data g.csv --data-seed 3 --out fit2.json").code == 0);
    CHECK(box.get("fit2.json") == box.get("fit.json"));
  }
  SUBCASE("population mode recovers the true parameters") {
    REQUIRE(box.run("fit --model ising4.json --objective gsm --data enumerate --p-model ising4.json --out p.json").code ==
            0);
    const auto res = nlohmann::json::parse(box.get("p.json"));
    const std::vector<double> want = {0, 0, 0, 0, 0.5, 0.5, 0.5};
    const auto theta = res["theta_hat"].get<std::vector<double>>();
    for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(theta[k] - want[k]) < 1e-5);
    CHECK(res["seed_of_data"].is_null());
  }
  SUBCASE("incompatible objective") {
    REQUIRE(box.run("generate --model gauss2.json --n 10 --seed 1 --out g.csv").code == 0);
    const Run r = box.run("fit --model gauss2.json --objective gsm --data g.csv --out f.json");
    CHECK(r.code == 2);
    CHECK(r.err.find("gsm") != std::string::npos);
    CHECK(r.err.find("gaussian") != std::string::npos);
    CHECK_FALSE(fs::exists(box.path("f.json")));
    CHECK(box.run("fit --model ising2.json --objective sm --data enumerate --p-model ising2.json --out f.json").code ==
          2);
    CHECK(box.run("fit --model ising2.json --objective nce --data enumerate --p-model ising2.json --out f.json").code ==
          2);
    CHECK(box.run("fit --model ising2.json --objective gsm --data enumerate --out f.json").code == 2);
    CHECK(box.run("fit --model ising2.json --objective gsm --data g.csv --out f.json").code == 2);
  }
}

TEST_CASE("compare") {
  Sandbox box;
  REQUIRE(box.run("compare --model ising4.json --objectives gsm,pl --n 300,600 --seeds 1..2 --out c.csv").code == 0);
  const std::string csv = box.get("c.csv");
  CHECK(csv.rfind("objective,n,seed,converged,iters,linf_error,objective_value,grad_norm\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + 2 * 2 * 2 + 2);
  CHECK(count_of(csv, ",inf,,") == 2);
  REQUIRE(box.run("compare --model ising4.json --objectives gsm,pl --n 300,600 --seeds 1,2 --out c2.csv").code == 0);
  CHECK(box.get("c2.csv") == csv);
  CHECK(box.run("compare --model ising4.json --seeds 2..1 --out c3.csv").code == 2);
  CHECK(box.run("compare --model gauss2.json --out c3.csv").code == 2);
}

TEST_CASE("scalespace") {
  Sandbox box;
  REQUIRE(box.run("scalespace --p gauss:0:1 --q gauss:0:2 --t 0.02:1:0.02 --out s.csv").code == 0);
  const std::string csv = box.get("s.csv");
  CHECK(csv.rfind("t,kl,fisher,dkl_dt\n", 0) == 0);
  CHECK(count_lines(csv) == 51);
  REQUIRE(box.run("scalespace --p gauss:0:1 --q gauss:0:2 --t 0.02:1:0.02 --out s2.csv").code == 0);
  CHECK(box.get("s2.csv") == csv);

  REQUIRE(box.run("scalespace --p 'mix:0.5,-1,0.5;0.5,1,0.5' --q 'mix:0.5,-1,0.5;0.5,1,0.5' --out same.csv").code == 0);
  std::istringstream in(box.get("same.csv"));
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const double kl = std::stod(line.substr(c1 + 1, line.find(',', c1 + 1) - c1 - 1));
    CHECK(std::abs(kl) <= 1e-10);
    ++rows;
  }
  CHECK(rows == 50);

  CHECK(box.run("scalespace --p gauss:0:1 --q gauss:0:-2 --out x.csv").code == 2);
  CHECK(box.run("scalespace --p gauss:0:1 --q gauss:0:2 --t 1:0:0.1 --out x.csv").code == 2);
  CHECK(box.run("scalespace --p gauss:0:1 --q gauss:0:2 --box -2:2 --out x.csv").code == 2);
  CHECK(box.run("scalespace --p cauchy:0:1 --q gauss:0:2 --out x.csv").code == 2);
}

TEST_CASE("verify") {
  Sandbox box;
  const Run t1 = box.run("verify --suite theorem1");
  CHECK(t1.code == 0);
  CHECK(t1.out.find("PASS theorem1") != std::string::npos);
  CHECK(t1.out.find("FAIL") == std::string::npos);

  const Run adj = box.run("verify --suite adjoint");
  CHECK(adj.code == 0);
  CHECK(adj.out.find("threshold=9.9999999999999998e-13") != std::string::npos);

  const Run all = box.run("verify --suite all");
  CHECK(all.code == 0);
  for (const char* s : {"theorem1", "debruijn", "lemma1", "heatpde", "adjoint", "brook", "eq16eq17", "rm-identity",
                        "gradcheck"}) {
    CAPTURE(s);
    CHECK(count_of(all.out, std::string("SUITE ") + s + " ") == 1);
  }
  CHECK(count_of(all.out, "SUITE ") == 9);
  CHECK(box.run("verify --suite nope").code == 2);
}
