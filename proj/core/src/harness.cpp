#include "dsq/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dsq/detection.hpp"
#include "dsq/errors.hpp"
#include "dsq/physicality.hpp"
#include "dsq/reconstruction.hpp"
#include "json.hpp"

namespace dsq {
namespace {

using nlohmann::ordered_json;

constexpr double kDeg = std::numbers::pi / 180.0;
// Sampled states may sit marginally outside the physical set; physicality
// of those is judged by heisenberg_check, so the negativity formula is
// evaluated without its own guard.
constexpr double kUnguarded = 1.0;
constexpr double kStatisticalSigma = 5.0;
constexpr std::uint64_t kReferenceStream = 0x5245464552454E43ULL;

std::string fmt(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& s) {
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw InvalidArgument("malformed number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw InvalidArgument("malformed number '" + s + "'");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct PointEstimates {
  double squeezing_db;
  double photon_number;
  double negativity_dpm;
  double negativity_rsm;
  SignalMomentSet dpm;
  SignalMomentSet rsm;
};

PointEstimates estimate(const RawMomentSet& signal, const RawMomentSet& reference, const DetectionChain& chain) {
  SignalMomentSet dpm = dpm_reconstruct(signal, chain);
  const GaussianState input = moments_to_state(dpm);
  SignalMomentSet rsm = rsm_reconstruct(signal, reference, chain);
  const GaussianState outputs = moments_to_state(rsm);
  return {squeezing_level_db(input, 0),
          photon_number(input, 0),
          negativity_details(hybrid_ring_split(input), kUnguarded).negativity,
          negativity_details(outputs, kUnguarded).negativity,
          std::move(dpm),
          std::move(rsm)};
}

RawMomentSet pool(const std::vector<RawMomentSet>& blocks) {
  RawMomentSet full = blocks.front();
  for (std::size_t i = 1; i < blocks.size(); ++i) full = RawMomentSet::merge(full, blocks[i]);
  return full;
}

std::vector<RawMomentSet> finalize_all(const std::vector<MomentAccumulator>& accs) {
  std::vector<RawMomentSet> out;
  out.reserve(accs.size());
  for (const auto& a : accs) out.push_back(a.finalize());
  return out;
}

std::string failure_kind(const std::exception& e) {
  if (dynamic_cast<const ReconstructionError*>(&e)) return "reconstruction-failure";
  if (dynamic_cast<const UnphysicalState*>(&e) || dynamic_cast<const DegenerateState*>(&e)) return "unphysical";
  if (dynamic_cast<const MalformedMoments*>(&e)) return "malformed-moments";
  return "error";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

double alpha_for_case(const ExperimentConfig& config, const WignerCase& c) {
  if (c.photons) return std::sqrt(*c.photons);
  return displacement_power_to_alpha(*c.power_dbm, config.coupler, config.rf);
}

GaussianState displaced_signal(const ExperimentConfig& config, double alpha, double theta_deg) {
  const DisplacementParams tone = tone_for_displacement(DisplacementParams(alpha, theta_deg * kDeg), config.coupler);
  return coupler_displace(jpa_emit(config.jpa), tone, config.coupler);
}

ordered_json sweep_to_json(const TemperatureSweep& sweep) {
  ordered_json points = ordered_json::array();
  for (const auto& p : sweep.points) {
    points.push_back({{"temperature_k", p.temperature_k}, {"variance", p.variance}, {"n_samples", p.n_samples}});
  }
  return {{"frequency_hz", sweep.frequency_hz}, {"points", points}};
}

TemperatureSweep sweep_from_json(const nlohmann::json& j) {
  TemperatureSweep s;
  s.frequency_hz = j.at("frequency_hz").get<double>();
  for (const auto& p : j.at("points")) {
    s.points.push_back({p.at("temperature_k").get<double>(), p.at("variance").get<double>(),
                        p.at("n_samples").get<std::uint64_t>()});
  }
  return s;
}

}  // namespace

DetectionChain reconstruction_chain(const ExperimentConfig& config) {
  DetectionChain chain = config.chain;
  if (config.sweep.calibration_file) {
    const CalibrationRun cal = load_calibration(*config.sweep.calibration_file);
    chain.gain_1 = cal.path_1.fit.total_gain;
    chain.gain_2 = cal.path_2.fit.total_gain;
    chain.noise_photons_1 = cal.path_1.fit.noise_photons;
    chain.noise_photons_2 = cal.path_2.fit.noise_photons;
  }
  return chain;
}

GaussianState sweep_point_state(const ExperimentConfig& config, double power_dbm, double theta_deg) {
  return displaced_signal(config, displacement_power_to_alpha(power_dbm, config.coupler, config.rf), theta_deg);
}

std::uint64_t sweep_point_seed(std::uint64_t seed, double power_dbm, double theta_deg) {
  const auto p = std::bit_cast<std::uint64_t>(power_dbm);
  const auto t = std::bit_cast<std::uint64_t>(theta_deg);
  return derive_seed(derive_seed(seed, p), t);
}

std::vector<SweepRow> run_displacement_sweep(const ExperimentConfig& config) {
  config.validate();
  const DetectionChain recon = reconstruction_chain(config);
  const std::size_t blocks = config.jackknife_blocks;

  const auto reference = finalize_all(simulate_moment_blocks(vacuum(1), config.chain, config.samples_per_point,
                                                             derive_seed(config.seed, kReferenceStream), blocks));
  const RawMomentSet reference_full = pool(reference);
  const auto reference_loo = leave_one_out(reference);

  std::vector<std::pair<double, double>> points;
  for (double power : config.sweep.displacement_powers_dbm)
    for (double theta : config.sweep.thetas_deg) points.emplace_back(power, theta);

  std::vector<SweepRow> rows(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& row = rows[i];
    const auto [power, theta] = points[i];
    row.power_dbm = power;
    row.theta_deg = theta;
    row.alpha = displacement_power_to_alpha(power, config.coupler, config.rf);
    const GaussianState truth = sweep_point_state(config, power, theta);
    row.truth_squeezing_db = squeezing_level_db(truth, 0);
    row.truth_photon_number = photon_number(truth, 0);
    row.truth_negativity = negativity(hybrid_ring_split(truth));

    try {
      const auto sampled = finalize_all(simulate_moment_blocks(
          truth, config.chain, config.samples_per_point, sweep_point_seed(config.seed, power, theta), blocks));
      if (sampled.size() != reference.size()) throw InvalidArgument("too few samples for the jackknife blocks");
      const auto full = estimate(pool(sampled), reference_full, recon);
      const auto loo = leave_one_out(sampled);

      std::vector<double> s, n, nd, nr;
      std::vector<SignalMomentSet> dpm_reps, rsm_reps;
      for (std::size_t b = 0; b < loo.size(); ++b) {
        auto e = estimate(loo[b], reference_loo[b], recon);
        s.push_back(e.squeezing_db);
        n.push_back(e.photon_number);
        nd.push_back(e.negativity_dpm);
        nr.push_back(e.negativity_rsm);
        dpm_reps.push_back(std::move(e.dpm));
        rsm_reps.push_back(std::move(e.rsm));
      }
      row.squeezing_db = {full.squeezing_db, jackknife_error(s)};
      row.photon_number = {full.photon_number, jackknife_error(n)};
      row.negativity_dpm = {full.negativity_dpm, jackknife_error(nd)};
      row.negativity_rsm = {full.negativity_rsm, jackknife_error(nr)};

      row.heisenberg_pass = heisenberg_check(full.dpm, dpm_reps, kStatisticalSigma).pass &&
                            heisenberg_check(full.rsm, rsm_reps, kStatisticalSigma).pass;
      GaussianityOptions gopt;
      gopt.k_sigma = kStatisticalSigma;
      row.gaussian_pass = gaussianity_check(full.dpm, dpm_reps, gopt).pass;
    } catch (const std::exception& e) {
      row.status = failure_kind(e);
    }
  }
  return rows;
}

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "power_dbm,theta_deg,alpha,status,squeezing_db,squeezing_db_err,photon_number,photon_number_err,"
         "negativity_dpm,negativity_dpm_err,negativity_rsm,negativity_rsm_err,truth_squeezing_db,"
         "truth_photon_number,truth_negativity,heisenberg_pass,gaussian_pass\n";
  for (const auto& r : rows) {
    out << fmt(r.power_dbm) << ',' << fmt(r.theta_deg) << ',' << fmt(r.alpha) << ',' << r.status << ','
        << fmt(r.squeezing_db.value) << ',' << fmt(r.squeezing_db.error) << ',' << fmt(r.photon_number.value) << ','
        << fmt(r.photon_number.error) << ',' << fmt(r.negativity_dpm.value) << ',' << fmt(r.negativity_dpm.error)
        << ',' << fmt(r.negativity_rsm.value) << ',' << fmt(r.negativity_rsm.error) << ','
        << fmt(r.truth_squeezing_db) << ',' << fmt(r.truth_photon_number) << ',' << fmt(r.truth_negativity) << ','
        << (r.heisenberg_pass ? 1 : 0) << ',' << (r.gaussian_pass ? 1 : 0) << '\n';
  }
}

std::vector<SweepRow> read_sweep_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("power_dbm,theta_deg,alpha,status", 0) != 0) {
    throw InvalidArgument("unexpected sweep table header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 17) throw InvalidArgument("sweep table row has " + std::to_string(f.size()) + " fields");
    SweepRow r;
    r.power_dbm = parse_number(f[0]);
    r.theta_deg = parse_number(f[1]);
    r.alpha = parse_number(f[2]);
    r.status = f[3];
    r.squeezing_db = {parse_number(f[4]), parse_number(f[5])};
    r.photon_number = {parse_number(f[6]), parse_number(f[7])};
    r.negativity_dpm = {parse_number(f[8]), parse_number(f[9])};
    r.negativity_rsm = {parse_number(f[10]), parse_number(f[11])};
    r.truth_squeezing_db = parse_number(f[12]);
    r.truth_photon_number = parse_number(f[13]);
    r.truth_negativity = parse_number(f[14]);
    r.heisenberg_pass = f[15] == "1";
    r.gaussian_pass = f[16] == "1";
    rows.push_back(r);
  }
  return rows;
}

std::vector<SweepRow> export_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const auto rows = run_displacement_sweep(config);
  std::filesystem::create_directories(out_dir);
  std::ostringstream table;
  write_sweep_table(table, rows);
  write_text(out_dir / "sweep.csv", table.str());

  ordered_json summary;
  summary["rows"] = rows.size();
  summary["ok_rows"] = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status == "ok"; });
  summary["heisenberg_pass"] =
      std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.heisenberg_pass; });
  summary["gaussian_pass"] = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.gaussian_pass; });
  summary["config"] = ordered_json::parse(to_json(config));
  write_text(out_dir / "sweep_summary.json", summary.dump(2) + "\n");
  return rows;
}

std::vector<WignerPanel> build_wigner_panels(const ExperimentConfig& config) {
  config.validate();
  std::vector<WignerPanel> panels;
  double half_range = 0.0;
  for (const auto& c : config.wigner.cases) {
    WignerPanel p;
    p.spec = c;
    p.alpha = alpha_for_case(config, c);
    p.state = displaced_signal(config, p.alpha, c.theta_deg);
    p.ellipse = contour_ellipse(p.state);
    p.squeezing_db = squeezing_level_db(p.state, 0);
    p.photon_number = photon_number(p.state, 0);
    const double sd = std::sqrt(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p.state.cov()).eigenvalues().maxCoeff());
    half_range = std::max(half_range, p.state.mean().cwiseAbs().maxCoeff() + 6.0 * sd);
    panels.push_back(std::move(p));
  }
  if (config.wigner.half_range) half_range = *config.wigner.half_range;
  for (auto& p : panels) {
    p.grid = wigner_grid(p.state, -half_range, half_range, -half_range, half_range, config.wigner.resolution);
  }
  return panels;
}

void write_wigner_grid(std::ostream& out, const WignerPanel& panel) {
  const auto& g = panel.grid;
  out << "# dsq wigner grid v1\n";
  out << "# label=" << panel.spec.label << "\n";
  out << "# theta_deg=" << fmt(panel.spec.theta_deg) << "\n";
  out << "# alpha=" << fmt(panel.alpha) << "\n";
  out << "# squeezing_db=" << fmt(panel.squeezing_db) << "\n";
  out << "# photon_number=" << fmt(panel.photon_number) << "\n";
  out << "# mean_q=" << fmt(panel.state.mean()(0)) << "\n";
  out << "# mean_p=" << fmt(panel.state.mean()(1)) << "\n";
  out << "# ellipse_center_q=" << fmt(panel.ellipse.center_q) << "\n";
  out << "# ellipse_center_p=" << fmt(panel.ellipse.center_p) << "\n";
  out << "# ellipse_semi_major=" << fmt(panel.ellipse.semi_major) << "\n";
  out << "# ellipse_semi_minor=" << fmt(panel.ellipse.semi_minor) << "\n";
  out << "# ellipse_angle_from_p_deg=" << fmt(panel.ellipse.angle_from_p / kDeg) << "\n";
  out << "# q_min=" << fmt(g.q_min) << "\n";
  out << "# q_max=" << fmt(g.q_max) << "\n";
  out << "# p_min=" << fmt(g.p_min) << "\n";
  out << "# p_max=" << fmt(g.p_max) << "\n";
  out << "# rows=" << g.values.rows() << "\n";
  out << "# cols=" << g.values.cols() << "\n";
  for (Eigen::Index r = 0; r < g.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.values.cols(); ++c) {
      if (c) out << ' ';
      out << fmt(g.values(r, c));
    }
    out << '\n';
  }
}

WignerGridFile read_wigner_grid(std::istream& in) {
  WignerGridFile file;
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos && line.size() > 2) file.metadata[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    std::stringstream ss(line);
    std::string token;
    std::vector<double> row;
    while (ss >> token) row.push_back(parse_number(token));
    rows.push_back(std::move(row));
  }
  const auto need = [&](const char* key) {
    const auto it = file.metadata.find(key);
    if (it == file.metadata.end()) throw InvalidArgument(std::string("wigner grid lacks ") + key);
    return parse_number(it->second);
  };
  const auto n_rows = static_cast<Eigen::Index>(need("rows"));
  const auto n_cols = static_cast<Eigen::Index>(need("cols"));
  if (static_cast<Eigen::Index>(rows.size()) != n_rows) throw InvalidArgument("wigner grid row count mismatch");
  file.grid.q_min = need("q_min");
  file.grid.q_max = need("q_max");
  file.grid.p_min = need("p_min");
  file.grid.p_max = need("p_max");
  file.grid.values.resize(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != n_cols) throw InvalidArgument("wigner grid column count mismatch");
    for (Eigen::Index c = 0; c < n_cols; ++c) file.grid.values(r, c) = rows[r][c];
  }
  return file;
}

std::vector<std::filesystem::path> export_wigner_panels(const ExperimentConfig& config,
                                                         const std::filesystem::path& out_dir) {
  const auto panels = build_wigner_panels(config);
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  std::string failures;
  for (const auto& p : panels) {
    const auto path = out_dir / ("wigner_" + p.spec.label + ".txt");
    try {
      std::ostringstream text;
      write_wigner_grid(text, p);
      write_text(path, text.str());
      written.push_back(path);
    } catch (const std::exception& e) {
      failures += std::string(failures.empty() ? "" : "; ") + e.what();
    }
  }
  if (!failures.empty()) throw std::runtime_error(failures);
  return written;
}

CalibrationRun run_calibration(const ExperimentConfig& config) {
  config.validate();
  if (!config.calibration) throw ConfigError("config has no calibration section");
  const auto& spec = *config.calibration;
  CalibrationRun run;
  run.path_1.sweep = simulate_sweep(config.chain.gain_1, config.chain.noise_photons_1, spec.temperatures_k,
                                    config.rf.carrier_frequency, spec.samples_per_point, derive_seed(spec.seed, 1));
  run.path_2.sweep = simulate_sweep(config.chain.gain_2, config.chain.noise_photons_2, spec.temperatures_k,
                                    config.rf.carrier_frequency, spec.samples_per_point, derive_seed(spec.seed, 2));
  run.path_1.fit = fit_gain_noise(run.path_1.sweep);
  run.path_2.fit = fit_gain_noise(run.path_2.sweep);
  return run;
}

std::string to_json(const CalibrationRun& run) {
  ordered_json j;
  const auto path = [](const PathCalibration& p) {
    ordered_json o;
    o["fit"] = ordered_json::parse(to_json(p.fit));
    o["sweep"] = sweep_to_json(p.sweep);
    return o;
  };
  j["path_1"] = path(run.path_1);
  j["path_2"] = path(run.path_2);
  return j.dump(2);
}

CalibrationRun calibration_run_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CalibrationRun run;
    run.path_1.fit = calibration_from_json(j.at("path_1").at("fit").dump());
    run.path_2.fit = calibration_from_json(j.at("path_2").at("fit").dump());
    run.path_1.sweep = sweep_from_json(j.at("path_1").at("sweep"));
    run.path_2.sweep = sweep_from_json(j.at("path_2").at("sweep"));
    return run;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed calibration file: ") + e.what());
  }
}

CalibrationRun load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open calibration file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return calibration_run_from_json(buffer.str());
}

CalibrationRun export_calibration(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const CalibrationRun run = run_calibration(config);
  std::filesystem::create_directories(out_dir);
  write_text(out_dir / "calibration.json", to_json(run) + "\n");
  for (int k = 1; k <= 2; ++k) {
    std::ostringstream csv;
    write_sweep_csv(csv, k == 1 ? run.path_1.sweep : run.path_2.sweep);
    write_text(out_dir / ("calibration_path" + std::to_string(k) + ".csv"), csv.str());
  }
  return run;
}

}  // namespace dsq
