#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sfgw/experiments.hpp"

namespace sfgw {

/// One point per row, comma separated. A first row with no numeric cell is a header.
PointCloud parse_point_cloud_text(std::string_view text);
PointCloud parse_point_cloud(const std::string& path);
void write_point_cloud(const std::string& path, const PointCloud& cloud);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

enum class Command { Discrepancy, SweepKappa, Convergence, Flow, GmmFit };

struct RunConfig {
  Command command = Command::Discrepancy;
  DiscrepancySpec spec;
  /// Mixture size when --kappas is not given; every component then uses spec.kappa.
  int components = 10;
  std::vector<double> kappa_list;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::string output = "results.csv";

  int trials = 1;
  int dim = 5;
  std::vector<int> sizes{10, 20, 40, 80, 160, 320, 640};
  bool control = false;

  int steps = 3000;
  int particles = 0;  // 0: as many as target points
  double step_size = 0.005;
  std::string particles_out;
  int batch = 256;
  int gmm_components = 10;
};

/// Write the results CSV (metric,parameter,value,std_error) and a JSON sidecar next
/// to it. Returns 0 on success, 1 on bad input, 2 on numerical failure; messages go
/// to `err`.
int run(const RunConfig& config, std::ostream& err);

/// Parse command-line arguments into a RunConfig and run it.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Path of the JSON sidecar for a results path: extension replaced by ".json".
std::string sidecar_path(const std::string& results_path);

}  // namespace sfgw
