#include "sfgw/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "sfgw/errors.hpp"

namespace sfgw {

namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_number(std::string_view cell, double& out) {
  cell = trim(cell);
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

std::string results_csv(const std::vector<ExperimentRecord>& rows) {
  std::string csv = "metric,parameter,value,std_error\n";
  for (const auto& r : rows) {
    csv += r.metric + "," + format_double(r.parameter) + "," + format_double(r.value) + "," +
           format_double(r.std_error) + "\n";
  }
  return csv;
}

std::string command_name(Command c) {
  switch (c) {
    case Command::Discrepancy:
      return "discrepancy";
    case Command::SweepKappa:
      return "sweep-kappa";
    case Command::Convergence:
      return "convergence";
    case Command::Flow:
      return "flow";
    case Command::GmmFit:
      return "gmm-fit";
  }
  return "?";
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Json config_json(const RunConfig& c, const DiscrepancySpec& spec) {
  Json j;
  j["command"] = command_name(c.command);
  j["seed"] = c.seed;
  j["inputs"] = c.inputs;
  j["output"] = c.output;
  j["kind"] = to_string(spec.kind);
  j["beta"] = spec.fgw.beta;
  j["exponent"] = spec.fgw.exponent;
  j["kappa"] = spec.kappa;
  j["kappas"] = to_vector(spec.kappas);
  j["alphas"] = to_vector(spec.alphas);
  j["components"] = c.components;
  j["L"] = spec.opt.num_projections;
  j["max_iter"] = spec.opt.max_iter;
  j["learning_rate"] = spec.opt.learning_rate;
  j["adam_beta1"] = spec.opt.adam_beta1;
  j["adam_beta2"] = spec.opt.adam_beta2;
  j["restarts"] = spec.opt.restarts;
  j["location_restarts"] = spec.opt.location_restarts;
  j["tolerance"] = spec.opt.tolerance;
  j["gradient"] = spec.opt.gradient_method == GradientMethod::Pathwise ? "pathwise" : "fd";
  switch (c.command) {
    case Command::SweepKappa:
      j["kappa_list"] = c.kappa_list;
      j["trials"] = c.trials;
      break;
    case Command::Convergence:
      j["dim"] = c.dim;
      j["sizes"] = c.sizes;
      j["trials"] = c.trials;
      j["control"] = c.control;
      break;
    case Command::Flow:
      j["steps"] = c.steps;
      j["particles"] = c.particles;
      j["step_size"] = c.step_size;
      j["particles_out"] = c.particles_out;
      break;
    case Command::GmmFit:
      j["steps"] = c.steps;
      j["step_size"] = c.step_size;
      j["batch"] = c.batch;
      j["gmm_components"] = c.gmm_components;
      break;
    case Command::Discrepancy:
      break;
  }
  return j;
}

// Fill in mixture defaults: K equal-weight components at spec.kappa.
DiscrepancySpec resolved_spec(const RunConfig& c) {
  DiscrepancySpec spec = c.spec;
  if (spec.kind == DiscrepancyKind::Mssfg) {
    if (spec.kappas.size() == 0) {
      if (c.components < 1) throw ParameterError("components must be at least 1");
      spec.kappas = Eigen::VectorXd::Constant(c.components, spec.kappa);
    }
    if (spec.alphas.size() == 0) {
      spec.alphas = Eigen::VectorXd::Constant(spec.kappas.size(), 1.0 / spec.kappas.size());
    }
  }
  spec.validate();
  return spec;
}

void need_inputs(const RunConfig& c, std::size_t n) {
  if (c.inputs.size() != n) {
    throw ParameterError(command_name(c.command) + " takes " + std::to_string(n) +
                         " input file(s), got " + std::to_string(c.inputs.size()));
  }
}

ExperimentResult execute(const RunConfig& c, const DiscrepancySpec& spec) {
  Rng rng(c.seed);
  ExperimentResult res;
  switch (c.command) {
    case Command::Discrepancy: {
      need_inputs(c, 2);
      const PointCloud mu = parse_point_cloud(c.inputs[0]);
      const PointCloud nu = parse_point_cloud(c.inputs[1]);
      const DiscrepancyReport r = compute_discrepancy(mu, nu, spec, rng);
      const bool has_kappa =
          spec.kind == DiscrepancyKind::Ssfg || spec.kind == DiscrepancyKind::Pssfg;
      res.table.push_back({to_string(spec.kind), has_kappa ? spec.kappa : 0.0, r.value,
                           r.std_error});
      break;
    }
    case Command::SweepKappa: {
      need_inputs(c, 2);
      if (c.kappa_list.empty()) throw ParameterError("--kappas is required");
      const PointCloud mu = parse_point_cloud(c.inputs[0]);
      const PointCloud nu = parse_point_cloud(c.inputs[1]);
      const Eigen::VectorXd kappas =
          Eigen::Map<const Eigen::VectorXd>(c.kappa_list.data(),
                                            static_cast<Eigen::Index>(c.kappa_list.size()));
      res = kappa_sweep(mu, nu, spec.fgw, kappas, spec.opt, c.trials, rng);
      break;
    }
    case Command::Convergence: {
      need_inputs(c, 0);
      res = convergence_rate(c.dim, c.sizes, c.trials, spec.fgw, spec.kappa, spec.opt, rng);
      if (c.control) {
        Rng control_rng = rng.split(1);
        const ExperimentResult ctl = wasserstein_convergence_control(c.sizes, c.trials,
                                                                     control_rng);
        res.table.insert(res.table.end(), ctl.table.begin(), ctl.table.end());
      }
      break;
    }
    case Command::Flow: {
      need_inputs(c, 1);
      const PointCloud target = parse_point_cloud(c.inputs[0]);
      const int n = c.particles > 0 ? c.particles : static_cast<int>(target.size());
      const FlowResult flow = particle_flow(target, n, spec, c.steps, c.step_size, rng);
      for (const auto& [step, v] : flow.monitor) res.table.push_back({"monitor_sfg", double(step), v, 0.0});
      for (std::size_t s = 0; s < flow.trace.size(); ++s) {
        res.table.push_back({to_string(spec.kind), static_cast<double>(s), flow.trace[s], 0.0});
      }
      if (!c.particles_out.empty()) write_point_cloud(c.particles_out, flow.snapshots.back().particles);
      break;
    }
    case Command::GmmFit: {
      need_inputs(c, 1);
      const PointCloud target = parse_point_cloud(c.inputs[0]);
      const GmmParams gmm =
          gmm_fit(target, c.gmm_components, spec, c.steps, c.step_size, c.batch, rng);
      for (Eigen::Index k = 0; k < gmm.components(); ++k) {
        const auto p = static_cast<double>(k);
        res.table.push_back({"weight", p, gmm.weights[k], 0.0});
        for (Eigen::Index j = 0; j < gmm.dim(); ++j) {
          res.table.push_back({"mean_" + std::to_string(j), p, gmm.means(k, j), 0.0});
        }
        for (Eigen::Index j = 0; j < gmm.dim(); ++j) {
          res.table.push_back({"log_std_" + std::to_string(j), p, gmm.log_std_devs(k, j), 0.0});
        }
      }
      break;
    }
  }
  return res;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  for (std::string_view cell : split_cells(text)) {
    cell = trim(cell);
    T v{};
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw ParameterError(std::string("cannot parse ") + flag + " value '" + std::string(cell) +
                           "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

PointCloud parse_point_cloud_text(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw EmptyInputError("point cloud file is empty");

  std::size_t first = 0;
  {
    const auto cells = split_cells(lines[0]);
    bool any_numeric = false;
    double dummy = 0.0;
    for (auto cell : cells) any_numeric = any_numeric || parse_number(cell, dummy);
    if (!any_numeric) first = 1;
  }
  if (first == lines.size()) throw EmptyInputError("point cloud file has a header but no rows");

  const long width = static_cast<long>(split_cells(lines[first]).size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(lines.size() - first), width);
  for (std::size_t i = first; i < lines.size(); ++i) {
    const long line_no = static_cast<long>(i) + 1;
    const auto cells = split_cells(lines[i]);
    if (static_cast<long>(cells.size()) != width) {
      throw FormatError("line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " fields, expected " +
                            std::to_string(width),
                        line_no);
    }
    for (long j = 0; j < width; ++j) {
      double v = 0.0;
      if (!parse_number(cells[static_cast<std::size_t>(j)], v) || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(j + 1) +
                             ": '" + std::string(trim(cells[static_cast<std::size_t>(j)])) +
                             "' is not a finite number",
                         line_no, j + 1);
      }
      m(static_cast<Eigen::Index>(i - first), j) = v;
    }
  }
  return PointCloud(std::move(m));
}

PointCloud parse_point_cloud(const std::string& path) {
  try {
    return parse_point_cloud_text(read_file(path));
  } catch (const FormatError& e) {
    // Keep the type, prefix the file name.
    if (dynamic_cast<const EmptyInputError*>(&e)) throw EmptyInputError(path + ": " + e.what());
    if (dynamic_cast<const ParseError*>(&e)) {
      throw ParseError(path + ": " + e.what(), e.line(), e.column());
    }
    throw FormatError(path + ": " + e.what(), e.line(), e.column());
  }
}

void write_point_cloud(const std::string& path, const PointCloud& cloud) {
  std::string text;
  const Eigen::MatrixXd& m = cloud.points();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) text += ',';
      text += format_double(m(i, j));
    }
    text += '\n';
  }
  write_file(path, text);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string sidecar_path(const std::string& results_path) {
  const auto slash = results_path.find_last_of('/');
  const auto dot = results_path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return results_path.substr(0, dot) + ".json";
  }
  return results_path + ".json";
}

int run(const RunConfig& config, std::ostream& err) {
  try {
    const DiscrepancySpec spec = resolved_spec(config);
    const ExperimentResult res = execute(config, spec);
    Json meta;
    meta["config"] = config_json(config, spec);
    Json extra = Json::object();
    for (const auto& [k, v] : res.metadata) extra[k] = v;
    meta["experiment"] = extra;
    write_file(config.output, results_csv(res.table));
    write_file(sidecar_path(config.output), meta.dump(2) + "\n");
    return 0;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spherical sliced fused Gromov-Wasserstein discrepancies"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string kind = "ssfg", gradient = "pathwise", kappas, alphas, kappa_list, sizes;
  int gmm_steps = 2000;
  double gmm_step_size = 0.05;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--kind", kind, "sfg, max-sfg, ssfg, pssfg or mssfg")->capture_default_str();
    sub->add_option("--beta", cfg.spec.fgw.beta, "weight of the Gromov-Wasserstein term")
        ->capture_default_str();
    sub->add_option("--exponent", cfg.spec.fgw.exponent, "ground cost exponent r")
        ->capture_default_str();
    sub->add_option("--kappa", cfg.spec.kappa, "concentration")->capture_default_str();
    sub->add_option("--mixture-kappas", kappas, "comma-separated mssfg concentrations");
    sub->add_option("--alphas", alphas, "comma-separated mssfg weights (default uniform)");
    sub->add_option("--components", cfg.components, "mssfg components when no list is given")
        ->capture_default_str();
    sub->add_option("--L", cfg.spec.opt.num_projections, "projections per estimate")
        ->capture_default_str();
    sub->add_option("--max-iter", cfg.spec.opt.max_iter, "ascent iterations")
        ->capture_default_str();
    sub->add_option("--lr", cfg.spec.opt.learning_rate, "Adam learning rate")
        ->capture_default_str();
    sub->add_option("--adam-beta1", cfg.spec.opt.adam_beta1)->capture_default_str();
    sub->add_option("--adam-beta2", cfg.spec.opt.adam_beta2)->capture_default_str();
    sub->add_option("--restarts", cfg.spec.opt.restarts, "max-sfg starts")->capture_default_str();
    sub->add_option("--location-restarts", cfg.spec.opt.location_restarts,
                    "independent location ascents for ssfg, pssfg, mssfg")
        ->capture_default_str();
    sub->add_option("--gradient", gradient, "pathwise or fd")->capture_default_str();
    sub->add_option("--seed", cfg.seed)->capture_default_str();
    sub->add_option("-o,--output", cfg.output, "results CSV; metadata goes to the .json next to it")
        ->capture_default_str();
  };

  auto* disc = app.add_subcommand("discrepancy", "discrepancy between two point clouds");
  common(disc);
  disc->add_option("inputs", cfg.inputs, "two point cloud CSV files")->expected(2)->required();

  auto* sweep = app.add_subcommand("sweep-kappa", "ssfg over a list of concentrations");
  common(sweep);
  sweep->add_option("--kappas", kappa_list, "comma-separated concentrations")->required();
  sweep->add_option("--trials", cfg.trials)->capture_default_str();
  sweep->add_option("inputs", cfg.inputs, "two point cloud CSV files")->expected(2)->required();

  auto* conv = app.add_subcommand("convergence", "empirical rate of ssfg(mu_n, mu) in n");
  common(conv);
  conv->add_option("--dim", cfg.dim)->capture_default_str();
  conv->add_option("--sizes", sizes, "comma-separated increasing sample sizes");
  conv->add_option("--trials", cfg.trials)->capture_default_str();
  conv->add_flag("--control", cfg.control, "also run the 1D Wasserstein control");

  auto* flow = app.add_subcommand("flow", "particle flow towards a target cloud");
  common(flow);
  flow->add_option("--steps", cfg.steps)->capture_default_str();
  flow->add_option("--particles", cfg.particles, "0 uses the target size")->capture_default_str();
  flow->add_option("--step-size", cfg.step_size)->capture_default_str();
  flow->add_option("--particles-out", cfg.particles_out, "CSV for the final particles");
  flow->add_option("target", cfg.inputs, "target point cloud CSV")->expected(1)->required();

  auto* gmm = app.add_subcommand("gmm-fit", "fit a diagonal Gaussian mixture to a cloud");
  common(gmm);
  gmm->add_option("--steps", gmm_steps)->capture_default_str();
  gmm->add_option("--step-size", gmm_step_size, "Adam learning rate")->capture_default_str();
  gmm->add_option("--batch", cfg.batch)->capture_default_str();
  gmm->add_option("--k", cfg.gmm_components, "mixture components")->capture_default_str();
  gmm->add_option("target", cfg.inputs, "target point cloud CSV")->expected(1)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    cfg.spec.kind = parse_discrepancy_kind(kind);
    if (gradient == "pathwise") {
      cfg.spec.opt.gradient_method = GradientMethod::Pathwise;
    } else if (gradient == "fd") {
      cfg.spec.opt.gradient_method = GradientMethod::FiniteDifference;
    } else {
      throw ParameterError("--gradient must be pathwise or fd");
    }
    auto to_eigen = [](const std::vector<double>& v) {
      return Eigen::VectorXd(
          Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    if (!kappas.empty()) cfg.spec.kappas = to_eigen(parse_list<double>(kappas, "--mixture-kappas"));
    if (!alphas.empty()) cfg.spec.alphas = to_eigen(parse_list<double>(alphas, "--alphas"));
    if (!kappa_list.empty()) cfg.kappa_list = parse_list<double>(kappa_list, "--kappas");
    if (!sizes.empty()) cfg.sizes = parse_list<int>(sizes, "--sizes");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  if (*disc) cfg.command = Command::Discrepancy;
  if (*sweep) cfg.command = Command::SweepKappa;
  if (*conv) cfg.command = Command::Convergence;
  if (*flow) cfg.command = Command::Flow;
  if (*gmm) cfg.command = Command::GmmFit;
  if (*gmm) {
    cfg.steps = gmm_steps;
    cfg.step_size = gmm_step_size;
  }
  return run(cfg, err);
}

}  // namespace sfgw
