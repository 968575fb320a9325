// Shell-level coverage of every subcommand: outputs exist, sidecars parse,
// exit codes follow the contract.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "spread/io.hpp"

namespace {

int failures = 0;
const std::string kDir = "cli_smoke_tmp";

int run(const std::string& args) {
  const std::string cmd = "cd " + kDir + " && " + std::string(SPREADPERC_BIN) + " " + args +
                          " > stdout.txt 2> stderr.txt";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::printf("[FAIL] %s\n", what.c_str());
  } else {
    std::printf("[ ok ] %s\n", what.c_str());
  }
}

bool file_has_header(const std::string& name, const std::string& header) {
  try {
    const std::string text = spread::read_text_file(kDir + "/" + name);
    return text.rfind(header, 0) == 0;
  } catch (...) {
    return false;
  }
}

bool sidecar_ok(const std::string& out_name) {
  try {
    const auto meta = nlohmann::json::parse(spread::read_text_file(kDir + "/" + out_name + ".meta.json"));
    return meta.contains("tool") && meta.contains("version") && meta.contains("config") &&
           meta.at("config").is_object();
  } catch (...) {
    return false;
  }
}

}  // namespace

int main() {
  std::system(("rm -rf " + kDir + " && mkdir -p " + kDir).c_str());

  check(run("sample --d 2 --r 2 --window-scale 6 --seed 1 --provenance poisson "
            "--lambda 1.5 --out cloud.csv --stats-out stats.csv") == 0 &&
            file_has_header("cloud.csv", "id,x0,x1") &&
            file_has_header("stats.csv", "replicate,d,r,lambda,n,C1,C2,components,wrap_any") &&
            sidecar_ok("cloud.csv"),
        "sample (poisson, with stats)");

  check(run("sample --d 2 --r 2 --window-scale 3 --provenance lattice --boundary free "
            "--out lat.csv") == 0 &&
            file_has_header("lat.csv", "id,x0,x1"),
        "sample (lattice, free window)");

  check(run("sample --d 2 --r 2 --window-scale 4 --provenance jittered --jitter 0.2 "
            "--seed 2 --out jit.csv") == 0,
        "sample (jittered torus)");

  check(run("sweep --d 2 --r 2 --window-scale 8 --replicates 4 --lambda-grid 0.5,1.5 "
            "--seed 3 --out sweep.csv --raw-out raw.csv") == 0 &&
            file_has_header("sweep.csv", "lambda,c1_frac_mean,c2_frac_mean,ci_lo,ci_hi") &&
            file_has_header("raw.csv", "replicate,d,r,lambda,n,C1,C2,components,wrap_any") &&
            sidecar_ok("sweep.csv"),
        "sweep with raw output");

  check(run("threshold --d 2 --r-list 4 --window-scale 12 --replicates 8 --tol 0.02 "
            "--seed 4 --out thr.csv") == 0 &&
            file_has_header("thr.csv", "r,lambda_c,ci_lo,ci_hi,criterion"),
        "threshold (wrap criterion)");

  check(run("threshold --d 2 --r-list 4 --window-scale 12 --replicates 8 --tol 0.05 "
            "--criterion giant --theta 0.1 --seed 5 --out thr2.csv") == 0,
        "threshold (giant criterion)");

  check(run("gw --lambda-grid 0.5,1,2,4 --out gw.csv") == 0 &&
            file_has_header("gw.csv", "lambda,psi,residual"),
        "gw table");

  check(run("opnorm --d 2 --lambda 1.5 --L 6 --m 32 --out n1.csv") == 0 &&
            file_has_header("n1.csv", "d,lambda,L,m,norm,iterations"),
        "opnorm box");
  check(run("opnorm --d 2 --lambda 1.5 --L 6 --m 32 --variant torus --out n2.csv") == 0,
        "opnorm torus");
  check(run("opnorm --d 2 --lambda 0 --L 6 --m 32 --out n3.csv") == 0 &&
            spread::read_text_file(kDir + "/n3.csv").find(",0,") != std::string::npos,
        "opnorm at lambda 0");

  check(run("renorm --d 2 --r 2 --lambda 2 --L 3 --replicates 40 --seed 6 --out good.csv") ==
            0 &&
            file_has_header("good.csv", "r,lambda,L,a,p_good,ci_lo,ci_hi"),
        "renorm (pilot-calibrated a)");

  check(run("bond --p 0.9 --bond-nx 24 --bond-ny 24 --replicates 20 --seed 7 --out bond.csv") ==
            0 &&
            file_has_header("bond.csv", "replicate,spanning"),
        "bond crossings");

  // error paths
  check(run("sweep --d 0 --out x.csv") == 1, "config error exits 1");
  check(run("sample --bogus-flag 1") != 0, "unknown flag rejected");
  check(run("threshold --r-list 4 --window-scale 6 --replicates 4 --lambda-lo 3 "
            "--lambda-hi 4 --seed 8 --out x.csv") == 2,
        "unbracketed bisection exits 2");

  std::system(("rm -rf " + kDir).c_str());
  if (failures) {
    std::printf("%d CLI check(s) failed\n", failures);
    return 1;
  }
  std::printf("all CLI checks passed\n");
  return 0;
}
