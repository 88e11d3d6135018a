#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "stable_slices/job.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stable polynomials, linear slices and symmetric coincidence problems: one JSON job per run"};
  std::string job_path, out_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_boundary, tol_cluster;
  std::optional<int> max_iters;
  app.add_option("--job", job_path, "job document (default: stdin)");
  app.add_option("--out", out_path, "result document (default: stdout)");
  app.add_option("--seed", seed, "seed for multistart commands, overrides the job");
  app.add_option("--tol-boundary", tol_boundary, "absolute boundary tolerance")->check(CLI::PositiveNumber);
  app.add_option("--tol-cluster", tol_cluster, "absolute cluster radius")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", max_iters, "iteration cap for compression and local searches")->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : stable_slices::exit_validation;
  }

  const stable_slices::JobOverrides over{seed, tol_boundary, tol_cluster, max_iters};
  std::ifstream job_file;
  if (!job_path.empty()) {
    job_file.open(job_path);
    if (!job_file) {
      std::cerr << "stable-slice: cannot open " << job_path << "\n";
      return stable_slices::exit_validation;
    }
  }
  std::istream& in = job_path.empty() ? std::cin : job_file;
  if (out_path.empty()) return stable_slices::run(in, std::cout, std::cerr, over);

  std::ostringstream buf;
  const int rc = stable_slices::run(in, buf, std::cerr, over);
  std::ofstream out(out_path, std::ios::binary);
  out << buf.str();
  if (!out) {
    std::cerr << "stable-slice: cannot write " << out_path << "\n";
    return stable_slices::exit_internal;
  }
  return rc;
}
