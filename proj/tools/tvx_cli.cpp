#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tvx/error.hpp"
#include "tvx/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitDiscrepancy = 1;
constexpr int kExitConfig = 2;

fs::path default_out() {
  const char* env = std::getenv("TVX_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path("tvx-out");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tvx: transversality certificates, gap reduction and multiplier rules"};
  app.require_subcommand(1);

  std::string out;
  std::uint64_t seed = 0;
  int budget = -1;
  double tol = 0.0;
  int workers = 1;
  int format = tvx::kReportFormat;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "output directory (default $TVX_OUT_DIR or ./tvx-out)");
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--budget", budget, "sampled pairs per estimator")->check(CLI::NonNegativeNumber);
    sub->add_option("--tol", tol, "gap-reduction tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--workers", workers, "parallel scenarios in a corpus")->check(CLI::PositiveNumber);
    sub->add_option("--format", format, "report format version");
  };

  std::string scenario_path;
  auto* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  add_common(run);

  std::string corpus_dir;
  auto* corpus = app.add_subcommand("corpus", "run every scenario in a directory");
  corpus->add_option("dir", corpus_dir, "directory of scenario files")->required();
  add_common(corpus);

  int nmax = 0;
  auto* hilbert = app.add_subcommand("hilbert", "Hilbert-cube scaling table (n, K_n)");
  hilbert->add_option("nmax", nmax, "largest dimension (at most 12)")->required();
  add_common(hilbert);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitClean : kExitConfig;
  }

  const fs::path outdir = out.empty() ? default_out() : fs::path(out);
  tvx::RunOptions opt;
  if (run->count("--seed") || corpus->count("--seed") || hilbert->count("--seed")) opt.seed = seed;
  if (budget >= 0) opt.budget = budget;
  if (tol > 0.0) opt.tol = tol;
  opt.format = format;

  try {
    if (*run) {
      const auto s = tvx::load_scenario(scenario_path);
      const auto r = tvx::run_scenario(s, opt);
      tvx::write_report(r, s.id, outdir);
      std::cout << r.text();
      return r.discrepancies > 0 ? kExitDiscrepancy : kExitClean;
    }
    if (*corpus) {
      const auto sum = tvx::run_corpus(corpus_dir, outdir, opt, workers);
      std::cout << sum.table();
      return sum.discrepancies > 0 ? kExitDiscrepancy : kExitClean;
    }
    if (*hilbert) {
      tvx::SamplingOptions so;
      if (opt.seed) so.seed = *opt.seed;
      if (opt.budget && *opt.budget > 0) so.pairs = *opt.budget;
      const auto csv = tvx::hilbert_csv(tvx::hilbert_cube_scaling(nmax, so));
      fs::create_directories(outdir);
      std::ofstream(outdir / "hilbert.csv") << csv;
      std::cout << csv;
      return kExitClean;
    }
  } catch (const tvx::Error& e) {
    std::cerr << "tvx: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "tvx: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitClean;
}
