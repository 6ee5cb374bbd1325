#pragma once

// Reusable experiment drivers shared by the CLI and the acceptance suite.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gods/kernels.hpp"
#include "gods/kods.hpp"
#include "gods/primal.hpp"
#include "gods/rcg.hpp"

namespace gods {

inline constexpr double kGradcheckTolerance = 1e-5;

struct GradcheckEntry {
  std::string name;  ///< bods, gods, gods_n, gods_o, gods_e, kods
  double max_rel_error = 0.0;
  int points = 0;
  bool pass = false;
};

/// Central-difference checks (h = 1e-6) of every objective at `points`
/// seeded feasible points: primal variants on d = 5, n = 10 (K = 2, K = 1
/// for BODS), KODS on n = 6, K = 2 with an RBF Gram matrix. `corrupt` adds
/// a constant offset to every analytic gradient (negative control).
std::vector<GradcheckEntry> run_gradchecks(std::uint64_t seed, int points = 20,
                                           bool corrupt = false,
                                           const std::optional<std::string>& only = std::nullopt);

struct BenchDataset {
  std::string name;
  std::string file;  ///< relative to the config directory
  std::string target;
  int label_column = -1;
  bool header = false;
  char delimiter = ',';
  std::optional<double> reference_gods_f1, reference_kods_f1;
};

/// Reads `<dir>/datasets.json`.
std::vector<BenchDataset> load_bench_config(const std::string& dir);

struct MethodStats {
  std::vector<double> f1;   ///< per seed; undefined F1 counts as 0
  std::vector<double> auc;  ///< per seed; NaN when undefined
  double mean_f1 = 0.0, std_f1 = 0.0, mean_auc = 0.0;
};

struct BenchRow {
  BenchDataset dataset;
  bool present = false;
  std::string notice;  ///< why the dataset was skipped
  Index rows = 0, dim = 0;
  MethodStats gods, kods;
  double max_kods_feasibility = 0.0;  ///< worst |U K U^T - I|_F over all KODS runs
};

struct BenchOptions {
  int seeds = 5;
  double ratio = 0.7;
  SolverConfig solver;
  GodsHyper gods;
  KodsHyper kods;
  KernelSpec kernel = KernelSpec::polynomial(3);
};

/// 70/30 one-class protocol: for each seed, train GODS and KODS on the target
/// split and score the held-out positives plus every other row with the
/// decision rule at eta. Missing files are skipped with a notice.
std::vector<BenchRow> bench_uci(const std::string& dir, const BenchOptions& options);

std::string format_bench_table(const std::vector<BenchRow>& rows);

}  // namespace gods
