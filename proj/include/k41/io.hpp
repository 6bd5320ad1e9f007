#pragma once

#include "k41/diagnostics.hpp"
#include "k41/eddy.hpp"
#include "k41/scaling.hpp"
#include "k41/simulation.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace k41 {

using Json = nlohmann::ordered_json;

enum class Mode { simulate, stokes, diagnose, sweep, conditions, scale_verify, eddy };

Mode parse_mode(const std::string& name);
std::string to_string(Mode m);

struct DiagnosticsOptions {
  int r_points = 64;
  double c0 = 1.0;            ///< window lower factor C₀
  double r0_scale = 0.5;      ///< R₀(ν) = r0_scale·ν^{-r0_exponent}
  double r0_exponent = 0.75;
  std::string input;          ///< checkpoint read by `diagnose`
};

struct ScaleOptions {
  double lambda = 2.0;
  double beta = -1.0 / 3;
  std::int64_t steps = 200;
  InitialField initial = InitialField::zero;
  double initial_scale = 1.0;
  double threshold = 1e-10;
};

struct EddyRunOptions {
  std::vector<double> eta{0.02, 0.04, 0.08, 0.16};
  std::vector<EddyOrder> orders{EddyOrder::grad, EddyOrder::hess};
  std::int64_t samples = 100000;
  std::int64_t j_samples = 100000;  ///< draws for the canonical constants
  int steps = 200;
  double r_max = 50;
};

/// Everything a run needs; the thread count is not part of it.
struct ExperimentConfig {
  Mode mode = Mode::simulate;
  std::uint64_t seed = 1;
  std::string out = "out";
  int members = 1;          ///< independent trajectories pooled into one measure
  bool checkpoint = true;   ///< write the final state of member 0
  SimulationConfig simulation;
  DiagnosticsOptions diagnostics;
  std::vector<double> sweep_nu{0.5, 0.25, 0.125};
  ScaleOptions scaling;
  EddyRunOptions eddy;
};

/// Parses and validates; unknown keys and bad values raise ConfigError naming the key.
ExperimentConfig config_from_json(const Json& j);
/// Text form; malformed text raises ParseError.
ExperimentConfig config_from_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Fully resolved config with every default spelled out.
Json config_to_json(const ExperimentConfig& c);
/// The resolved config without the output path, as recorded in every output.
Json experiment_json(const ExperimentConfig& c);

struct Provenance {
  std::string config_hash;  ///< FNV-1a 64 of the compact experiment_json
  std::uint64_t seed = 0;
  std::string version;
};

Provenance provenance(const ExperimentConfig& c);
std::string fnv1a_hex(const std::string& bytes);
std::string library_version();

inline constexpr std::uint32_t checkpoint_version = 1;
inline constexpr std::size_t checkpoint_header_bytes = 32;

/// Little-endian "K41F" layout of the canonical half lattice.
std::string encode_checkpoint(const Field& u);
/// Raises FormatError on a bad magic, version, length or divergence.
Field decode_checkpoint(const std::string& bytes, double tol = 1e-10);
void write_checkpoint(const Field& u, const std::string& path);
Field read_checkpoint(const std::string& path, double tol = 1e-10);

Json report_json(const DiagnosticsReport& r, const ExperimentConfig& c);
/// r,value,stderr rows after a provenance comment line.
std::string s2_csv(const std::vector<S2Point>& s2, const Provenance& p);
std::string sweep_csv(const std::vector<WindowRow>& rows, const Provenance& p);

struct EddyRow {
  double eta = 0;
  EddyOrder order = EddyOrder::grad;
  Estimate estimate;
  double reduced_value = 0;
  double reduced_stderr = 0;
};

std::string eddy_csv(const std::vector<EddyRow>& rows, const Provenance& p);

/// %.17g.
std::string format_double(double x);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

struct RunOptions {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  int threads = 1;
};

/// Applies the overrides, dispatches on the mode and writes the outputs.
/// Returns 0 on success, 1 for configuration and file errors, 2 on numerical
/// blowup and 3 when a verification fails.
int run(ExperimentConfig config, const RunOptions& options, std::ostream& log);

/// Loads `config_path` (defaults when empty) for the given subcommand and runs it.
int run_command(Mode mode, const std::string& config_path, const RunOptions& options, std::ostream& log);

/// Runs `f(i)` for i < count on up to `threads` workers; results keep index order
/// and the lowest failing index decides which exception propagates.
template <typename F>
auto parallel_map(int count, int threads, F&& f) -> std::vector<std::invoke_result_t<F&, int>> {
  using R = std::invoke_result_t<F&, int>;
  std::vector<std::optional<R>> slots(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        slots[static_cast<std::size_t>(i)].emplace(f(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min(threads, count));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<R> out;
  out.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace k41
