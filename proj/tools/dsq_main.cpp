// dsq: displaced-squeezing simulation and tomography driver.
//
// Exit codes: 0 success, 1 unexpected error, 2 configuration or usage
// error, 3 reconstruction failure (including any failed sweep row),
// 4 calibration fit failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dsq/config.hpp"
#include "dsq/errors.hpp"
#include "dsq/harness.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitReconstruction = 3;
constexpr int kExitFit = 4;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  std::string out;
};

dsq::ExperimentConfig resolve_config(const Options& opt) {
  dsq::ExperimentConfig config =
      opt.config_path.empty() ? dsq::ExperimentConfig::defaults() : dsq::load_config(opt.config_path);
  if (opt.seed) config.seed = *opt.seed;
  if (opt.samples) config.samples_per_point = *opt.samples;
  config.validate();
  return config;
}

std::filesystem::path output_dir(const Options& opt, const dsq::ExperimentConfig& config) {
  if (!opt.out.empty()) return opt.out;
  if (!config.outputs.empty()) return config.outputs;
  if (const char* env = std::getenv("DSQ_OUTPUT_DIR"); env && *env) return env;
  return "dsq-out";
}

int cmd_sweep(const Options& opt) {
  const auto config = resolve_config(opt);
  const auto dir = output_dir(opt, config);
  const auto rows = dsq::export_sweep(config, dir);
  int failed = 0;
  for (const auto& r : rows) {
    if (r.status != "ok") {
      std::cerr << "row power=" << r.power_dbm << " dBm theta=" << r.theta_deg << " deg failed: " << r.status << '\n';
      ++failed;
    }
  }
  std::cout << "wrote " << rows.size() << " rows to " << (dir / "sweep.csv").string() << '\n';
  return failed ? kExitReconstruction : 0;
}

int cmd_wigner(const Options& opt) {
  const auto config = resolve_config(opt);
  for (const auto& path : dsq::export_wigner_panels(config, output_dir(opt, config))) {
    std::cout << "wrote " << path.string() << '\n';
  }
  return 0;
}

int cmd_calibrate(const Options& opt) {
  const auto config = resolve_config(opt);
  const auto dir = output_dir(opt, config);
  const auto run = dsq::export_calibration(config, dir);
  std::cout << "path 1: G = " << run.path_1.fit.total_gain << " +- " << run.path_1.fit.gain_error()
            << ", N = " << run.path_1.fit.noise_photons << " +- " << run.path_1.fit.noise_error() << '\n';
  std::cout << "path 2: G = " << run.path_2.fit.total_gain << " +- " << run.path_2.fit.gain_error()
            << ", N = " << run.path_2.fit.noise_photons << " +- " << run.path_2.fit.noise_error() << '\n';
  std::cout << "wrote " << (dir / "calibration.json").string() << '\n';
  return 0;
}

int cmd_selftest() {
  const int failures = dsq::run_selftest(std::cout);
  std::cout << (failures ? std::to_string(failures) + " check(s) failed" : std::string("all checks passed")) << '\n';
  return failures ? kExitError : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Displaced squeezed state simulation, dual-path tomography and calibration"};
  app.require_subcommand(1);
  Options opt;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON experiment config (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_option("--out", opt.out, "output directory (else config outputs, $DSQ_OUTPUT_DIR, ./dsq-out)");
    sub->add_option("--samples", opt.samples, "override samples per sweep point")->check(CLI::PositiveNumber);
  };
  auto* sweep = app.add_subcommand("sweep", "displacement sweep with DPM and RSM reconstruction");
  auto* wigner = app.add_subcommand("wigner", "export Wigner function grids");
  auto* calibrate = app.add_subcommand("calibrate", "simulated Planck calibration of both paths");
  auto* selftest = app.add_subcommand("selftest", "analytic invariant checks");
  for (auto* sub : {sweep, wigner, calibrate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sweep) return cmd_sweep(opt);
    if (*wigner) return cmd_wigner(opt);
    if (*calibrate) return cmd_calibrate(opt);
    if (*selftest) return cmd_selftest();
  } catch (const dsq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dsq::ReconstructionError& e) {
    std::cerr << "reconstruction failed: " << e.what() << '\n';
    return kExitReconstruction;
  } catch (const dsq::FitError& e) {
    std::cerr << "calibration fit failed: " << e.what() << '\n';
    return kExitFit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
