#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adaptscale/adapt.hpp"
#include "adaptscale/analysis.hpp"
#include "adaptscale/errors.hpp"
#include "adaptscale/exact.hpp"
#include "adaptscale/pools.hpp"

namespace adaptscale::cli {

inline constexpr const char* kVersion = "0.3.0";

/// 64-bit FNV-1a, printed as 16 hex digits.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

struct ManifestEntry {
  std::string label;
  std::filesystem::path fcidump;
  std::optional<int> spin_multiplicity;  // defaults to the FCIDUMP's MS2 + 1
  pools::PoolKind pool = pools::PoolKind::qeb;
  bool tetris = false;
  double target_error = adapt::kEpsilonChem;
  std::size_t max_iterations = 200;
  std::optional<double> pool_fraction;
  std::optional<std::uint64_t> pool_seed;
  std::size_t line = 0;

  /// Canonical key = value text used for hashing.
  std::string canonical() const;
};

struct ExperimentManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path output_dir = "adaptscale_out";
  std::optional<std::filesystem::path> cost_table;
  std::vector<double> alpha_grid{0.25, 0.5, 1.0, 2.0};
  std::vector<double> epsilon_grid{adapt::kEpsilonChem};
  double probability_floor = 1e-16;

  void validate() const;
};

/// TOML-style text: top-level `key = value` pairs followed by repeated
/// `[entry]` sections. Relative paths resolve against `base_dir`.
ExperimentManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = ".");
ExperimentManifest read_manifest(const std::filesystem::path& path);

/// Key = value defaults for global flags, from --config or ADAPTSCALE_CONFIG.
struct ToolConfig {
  std::size_t jobs = 1;
  std::uint64_t seed = 1;
  std::uint64_t memory_budget_bytes = std::uint64_t{2} << 30;
  std::optional<std::filesystem::path> cost_table;
};
ToolConfig parse_config(std::string_view text);
/// Reads `explicit_path` if given, else $ADAPTSCALE_CONFIG if set, else defaults.
ToolConfig load_config(const std::optional<std::filesystem::path>& explicit_path);

pools::CostTable load_cost_table(const std::optional<std::filesystem::path>& path);

std::string version_banner(const pools::CostTable& table = pools::CostTable::defaults());

// Trace and reference files.

void write_trace_csv(std::ostream& out, const adapt::AdaptTrace& trace, const std::string& entry_hash);
std::string trace_csv(const adapt::AdaptTrace& trace, const std::string& entry_hash);

struct TraceFile {
  std::string entry_hash;
  std::string label;
  std::vector<adapt::IterationRecord> records;
  std::vector<analysis::TracePoint> points() const;
};
TraceFile read_trace_csv(std::istream& in);
TraceFile read_trace_csv_file(const std::filesystem::path& path);

struct PoolInfo {
  pools::PoolKind kind = pools::PoolKind::qeb;
  std::size_t full_size = 0;
  std::size_t size = 0;
  std::optional<double> fraction;
  std::optional<std::uint64_t> seed;
};

std::string trace_json(const adapt::AdaptTrace& trace, const PoolInfo& pool, const pools::CostTable& table,
                       const std::string& entry_hash);

struct ReferenceData {
  std::string label;
  std::string entry_hash;
  std::size_t n_orbitals = 0;
  std::size_t n_alpha = 0;
  std::size_t n_beta = 0;
  int spin_multiplicity = 1;
  double energy = 0.0;
  double spin_sq = 0.0;
  std::size_t n_determinants = 0;
  double floor = 1e-16;
  std::size_t n_truncated = 0;
  std::vector<double> probabilities;  // descending, entries <= floor dropped
};

ReferenceData make_reference(const exact::CiVector& v, const std::string& label, int spin_multiplicity,
                             double floor, const std::string& entry_hash = "");
std::string reference_json(const ReferenceData& ref, const std::vector<double>& alpha_grid);
ReferenceData read_reference_json(const std::filesystem::path& path);

// Sweeps.

struct RunOptions {
  bool force = false;
  std::size_t jobs = 1;
  std::uint64_t memory_budget_bytes = std::uint64_t{2} << 30;
  std::ostream* log = nullptr;
};

struct SummaryRow {
  std::string label;
  std::string entry_hash;
  bool ok = false;
  bool skipped = false;  // outputs already present
  std::string error;
  std::size_t n_orbitals = 0;
  std::vector<double> entropies;                     // per alpha grid value
  std::vector<std::optional<std::size_t>> n_adapt;  // per epsilon grid value
  double final_error = 0.0;
  std::string stop_reason;
};

struct SweepSummary {
  std::vector<double> alpha_grid;
  std::vector<double> epsilon_grid;
  std::vector<SummaryRow> rows;
  bool all_ok() const;
};

std::string entry_hash(const ManifestEntry& entry, const pools::CostTable& table);

/// Estimated peak memory of one entry: 2^n_qubits * 16 bytes times the
/// number of live statevector workspaces.
std::uint64_t entry_memory_estimate(std::size_t n_qubits);

SummaryRow run_entry(const ManifestEntry& entry, const ExperimentManifest& manifest,
                     const pools::CostTable& table, bool force);
SweepSummary run_manifest(const ExperimentManifest& manifest, const RunOptions& options);
std::string summary_csv(const SweepSummary& summary);

}  // namespace adaptscale::cli
