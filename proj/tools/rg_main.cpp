#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refgov/governor.hpp"
#include "refgov/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Logarithmic-norm reference governor: certify, simulate, compare, audit"};
  app.require_subcommand(1);

  refgov::RunOptions opts;
  std::string seeds;
  std::vector<std::string> kinds;
  std::string certificate;
  std::string trace;
  std::size_t density = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Scenario JSON file")->required();
    sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", opts.threads, "Worker threads (0 = RG_THREADS or all cores)");
  };

  auto* certify = app.add_subcommand("certify", "Compute the contraction certificate table");
  add_common(certify);
  certify->add_option("--grid-density", density, "Override grid points per axis");

  auto* run = app.add_subcommand("run", "Run closed-loop simulations and audit them");
  add_common(run);
  run->add_option("--seeds", seeds, "Comma-separated seeds, or a count N for seeds 1..N");
  run->add_option("--kinds", kinds, "Governor kinds (RG_NL, RG_L, NONE)")->delimiter(',');
  run->add_option("--certificate", certificate, "Reuse a certificate table");

  auto* compare = app.add_subcommand("compare", "Run RG_NL, RG_L and NONE on one seed");
  add_common(compare);
  compare->add_option("--seeds", seeds, "Seed to use (first of a list)");
  compare->add_option("--certificate", certificate, "Reuse a certificate table");

  auto* audit = app.add_subcommand("audit", "Audit CSV traces against the state constraints");
  add_common(audit);
  audit->add_option("--trace", trace, "Trace to audit (default: all scenario traces in --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : refgov::kExitConfigError;
  }

  try {
    if (!seeds.empty()) {
      if (run->parsed() && seeds.find(',') == std::string::npos) {
        const auto n = std::stoull(seeds);
        for (std::uint64_t s = 1; s <= n; ++s) opts.seeds.push_back(s);
      } else {
        std::size_t pos = 0;
        while (pos <= seeds.size()) {
          const auto next = seeds.find(',', pos);
          opts.seeds.push_back(std::stoull(seeds.substr(pos, next - pos)));
          if (next == std::string::npos) break;
          pos = next + 1;
        }
      }
    }
    for (const auto& k : kinds) opts.kinds.push_back(refgov::parse_governor_kind(k));
  } catch (const std::exception& e) {
    std::cerr << "error: bad option: " << e.what() << '\n';
    return refgov::kExitConfigError;
  }
  if (!certificate.empty()) opts.certificate = certificate;
  if (!trace.empty()) opts.trace = trace;
  if (density > 0) opts.grid_density = density;

  if (certify->parsed()) return refgov::cmd_certify(opts, std::cout);
  if (run->parsed()) return refgov::cmd_run(opts, std::cout);
  if (compare->parsed()) return refgov::cmd_compare(opts, std::cout);
  return refgov::cmd_audit(opts, std::cout);
}
