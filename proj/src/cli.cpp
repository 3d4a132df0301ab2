#include "adaptscale/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "adaptscale/complexity.hpp"
#include "adaptscale/hamio.hpp"
#include "adaptscale/pauli.hpp"

namespace adaptscale::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Strips a trailing `#` comment outside of double quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

struct Value {
  std::string text;
  std::size_t line;

  [[noreturn]] void fail(const std::string& what) const {
    throw ManifestError("line " + std::to_string(line) + ": " + what);
  }
  std::string as_string() const {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') return text.substr(1, text.size() - 2);
    if (text.empty()) fail("empty value");
    return text;
  }
  double as_double() const {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0' || !std::isfinite(v)) fail("'" + text + "' is not a number");
    return v;
  }
  std::uint64_t as_uint() const {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
      fail("'" + text + "' is not a non-negative integer");
    return std::stoull(text);
  }
  bool as_bool() const {
    if (text == "true") return true;
    if (text == "false") return false;
    fail("'" + text + "' is not true or false");
  }
  std::vector<double> as_list() const {
    if (text.size() < 2 || text.front() != '[' || text.back() != ']') fail("expected [a, b, ...]");
    std::vector<double> out;
    std::stringstream ss(text.substr(1, text.size() - 2));
    for (std::string item; std::getline(ss, item, ',');) {
      const std::string t = trim(item);
      if (t.empty()) continue;
      out.push_back(Value{t, line}.as_double());
    }
    if (out.empty()) fail("empty list");
    return out;
  }
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string ManifestEntry::canonical() const {
  std::string s;
  s += "label=" + label + "\n";
  s += "fcidump=" + fcidump.filename().string() + "\n";
  s += "spin_multiplicity=" + (spin_multiplicity ? std::to_string(*spin_multiplicity) : std::string("auto")) + "\n";
  s += "pool=" + std::string(pools::to_string(pool)) + "\n";
  s += std::string("tetris=") + (tetris ? "true" : "false") + "\n";
  s += "target_error=" + fmt_double(target_error) + "\n";
  s += "max_iterations=" + std::to_string(max_iterations) + "\n";
  s += "pool_fraction=" + (pool_fraction ? fmt_double(*pool_fraction) : std::string("none")) + "\n";
  s += "pool_seed=" + (pool_seed ? std::to_string(*pool_seed) : std::string("none")) + "\n";
  return s;
}

void ExperimentManifest::validate() const {
  if (entries.empty()) throw ManifestError("manifest has no [entry] sections");
  std::set<std::string> labels;
  for (const auto& e : entries) {
    const std::string where = "entry at line " + std::to_string(e.line);
    if (e.label.empty()) throw ManifestError(where + ": missing label");
    if (e.label.find_first_of("/\\ \t,") != std::string::npos)
      throw ManifestError(where + ": label '" + e.label + "' must not contain separators or spaces");
    if (!labels.insert(e.label).second) throw ManifestError(where + ": duplicate label '" + e.label + "'");
    if (e.fcidump.empty()) throw ManifestError(where + ": missing fcidump");
    if (!fs::exists(e.fcidump)) throw ManifestError(where + ": file not found: " + e.fcidump.string());
    if (!(e.target_error > 0.0)) throw ManifestError(where + ": target_error must be positive");
    if (e.max_iterations < 1) throw ManifestError(where + ": max_iterations must be at least 1");
    if (e.pool_fraction && !(*e.pool_fraction > 0.0 && *e.pool_fraction <= 1.0))
      throw ManifestError(where + ": pool_fraction must lie in (0, 1]");
    if (e.spin_multiplicity && *e.spin_multiplicity < 1)
      throw ManifestError(where + ": spin_multiplicity must be at least 1");
  }
  if (cost_table && !fs::exists(*cost_table))
    throw ManifestError("cost table not found: " + cost_table->string());
}

ExperimentManifest parse_manifest(std::string_view text, const fs::path& base_dir) {
  ExperimentManifest m;
  std::istringstream in{std::string(text)};
  ManifestEntry* current = nullptr;
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[entry]") throw ManifestError("line " + std::to_string(line_no) + ": unknown section " + line);
      m.entries.emplace_back();
      current = &m.entries.back();
      current->line = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ManifestError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const Value v{trim(line.substr(eq + 1)), line_no};
    if (!current) {
      if (key == "output_dir") m.output_dir = resolve(base_dir, v.as_string());
      else if (key == "cost_table") m.cost_table = resolve(base_dir, v.as_string());
      else if (key == "alpha_grid") m.alpha_grid = v.as_list();
      else if (key == "epsilon_grid") m.epsilon_grid = v.as_list();
      else if (key == "probability_floor") m.probability_floor = v.as_double();
      else v.fail("unknown top-level key '" + key + "'");
      continue;
    }
    auto& e = *current;
    if (key == "label") e.label = v.as_string();
    else if (key == "fcidump") e.fcidump = resolve(base_dir, v.as_string());
    else if (key == "spin_multiplicity") e.spin_multiplicity = static_cast<int>(v.as_uint());
    else if (key == "pool") {
      try {
        e.pool = pools::parse_pool_kind(v.as_string());
      } catch (const Error& err) {
        v.fail(err.what());
      }
    } else if (key == "tetris") e.tetris = v.as_bool();
    else if (key == "target_error") e.target_error = v.as_double();
    else if (key == "max_iterations") e.max_iterations = static_cast<std::size_t>(v.as_uint());
    else if (key == "pool_fraction") e.pool_fraction = v.as_double();
    else if (key == "pool_seed") e.pool_seed = v.as_uint();
    else v.fail("unknown entry key '" + key + "'");
  }
  if (m.output_dir.is_relative()) m.output_dir = base_dir / m.output_dir;
  for (auto& e : m.entries)
    if (e.pool_fraction && !e.pool_seed) e.pool_seed = 1;
  m.validate();
  return m;
}

ExperimentManifest read_manifest(const fs::path& path) {
  return parse_manifest(read_text(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

ToolConfig parse_config(std::string_view text) {
  ToolConfig c;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const Value v{trim(line.substr(eq + 1)), line_no};
    try {
      if (key == "jobs") c.jobs = std::max<std::size_t>(1, v.as_uint());
      else if (key == "seed") c.seed = v.as_uint();
      else if (key == "memory_budget_mb") c.memory_budget_bytes = v.as_uint() << 20;
      else if (key == "cost_table") c.cost_table = v.as_string();
      else throw Error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    } catch (const ManifestError& e) {
      throw Error(std::string("config ") + e.what());
    }
  }
  return c;
}

ToolConfig load_config(const std::optional<fs::path>& explicit_path) {
  std::optional<fs::path> path = explicit_path;
  if (!path) {
    if (const char* env = std::getenv("ADAPTSCALE_CONFIG"); env && *env) path = fs::path(env);
  }
  if (!path) return {};
  ToolConfig c = parse_config(read_text(*path));
  if (c.cost_table && c.cost_table->is_relative()) c.cost_table = path->parent_path() / *c.cost_table;
  return c;
}

pools::CostTable load_cost_table(const std::optional<fs::path>& path) {
  if (!path) return pools::CostTable::defaults();
  return pools::CostTable::parse(read_text(*path));
}

std::string version_banner(const pools::CostTable& table) {
  std::string s;
  s += std::string("adaptscale ") + kVersion + "\n";
  s += "cost_table_hash=" + hex64(fnv1a(table.to_text())) + "\n";
  s += "epsilon_chem=1.6e-3\n";
  s += "alpha_star=0.25\n";
  return s;
}

// ---------------------------------------------------------------- traces

namespace {
const char* kTraceHeader =
    "iteration,energy,energy_error,max_gradient,spin_sq,spin_deviation,operators_added,"
    "cumulative_parameters,cumulative_cnots,inner_iterations,stalled,selected";
}

void write_trace_csv(std::ostream& out, const adapt::AdaptTrace& trace, const std::string& entry_hash) {
  out << "# adaptscale trace label=" << trace.molecule_label << " entry_hash=" << entry_hash << "\n";
  out << kTraceHeader << "\n";
  for (const auto& r : trace.records) {
    std::string sel;
    for (std::size_t i = 0; i < r.selected.size(); ++i) {
      if (i) sel += ';';
      sel += std::to_string(r.selected[i]);
    }
    out << r.iteration_index << ',' << fmt_double(r.energy) << ',' << fmt_double(r.energy_error) << ','
        << fmt_double(r.max_gradient) << ',' << fmt_double(r.spin_sq) << ',' << fmt_double(r.spin_deviation)
        << ',' << r.operators_added << ',' << r.cumulative_parameters << ',' << r.cumulative_cnots << ','
        << r.inner_iterations << ',' << (r.stalled ? 1 : 0) << ',' << sel << "\n";
  }
}

std::string trace_csv(const adapt::AdaptTrace& trace, const std::string& entry_hash) {
  std::ostringstream ss;
  write_trace_csv(ss, trace, entry_hash);
  return ss.str();
}

std::vector<analysis::TracePoint> TraceFile::points() const {
  std::vector<analysis::TracePoint> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back({r.iteration_index, r.energy_error, r.cumulative_parameters, r.cumulative_cnots});
  return out;
}

TraceFile read_trace_csv(std::istream& in) {
  TraceFile f;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw ParseError("trace: " + what, line_no);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      for (std::string tok; ss >> tok;) {
        if (tok.rfind("label=", 0) == 0) f.label = tok.substr(6);
        if (tok.rfind("entry_hash=", 0) == 0) f.entry_hash = tok.substr(11);
      }
      continue;
    }
    if (line.rfind("iteration,", 0) == 0) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (cells.size() == 11) cells.emplace_back();
    if (cells.size() != 12) fail("expected 12 columns");
    adapt::IterationRecord r;
    try {
      r.iteration_index = std::stoull(cells[0]);
      r.energy = std::strtod(cells[1].c_str(), nullptr);
      r.energy_error = std::strtod(cells[2].c_str(), nullptr);
      r.max_gradient = std::strtod(cells[3].c_str(), nullptr);
      r.spin_sq = std::strtod(cells[4].c_str(), nullptr);
      r.spin_deviation = std::strtod(cells[5].c_str(), nullptr);
      r.operators_added = std::stoull(cells[6]);
      r.cumulative_parameters = std::stoull(cells[7]);
      r.cumulative_cnots = std::stoull(cells[8]);
      r.inner_iterations = std::stoull(cells[9]);
      r.stalled = cells[10] == "1";
      std::stringstream sel(cells[11]);
      for (std::string c; std::getline(sel, c, ';');)
        if (!c.empty()) r.selected.push_back(std::stoull(c));
    } catch (const std::exception&) {
      fail("malformed value");
    }
    f.records.push_back(std::move(r));
  }
  return f;
}

TraceFile read_trace_csv_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_trace_csv(in);
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json cost_table_json(const pools::CostTable& t) {
  auto opt = [](const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"pauli_string_per_link", opt(t.pauli_string_per_link)},
              {"qubit_excitation_single", opt(t.qubit_excitation_single)},
              {"qubit_excitation_double", opt(t.qubit_excitation_double)},
              {"ceo_combined", opt(t.ceo_combined)},
              {"ceo_combined_per_extra_slot", t.ceo_combined_per_extra_slot},
              {"hash", hex64(fnv1a(t.to_text()))}};
}

}  // namespace

std::string trace_json(const adapt::AdaptTrace& trace, const PoolInfo& pool, const pools::CostTable& table,
                       const std::string& entry_hash) {
  const auto& c = trace.config;
  json j;
  j["entry_hash"] = entry_hash;
  j["molecule_label"] = trace.molecule_label;
  j["pool"] = {{"kind", std::string(pools::to_string(pool.kind))},
               {"full_size", pool.full_size},
               {"size", pool.size},
               {"fraction", pool.fraction ? json(*pool.fraction) : json(nullptr)},
               {"seed", pool.seed ? json(*pool.seed) : json(nullptr)}};
  j["config"] = {{"target_error", c.target_error},
                 {"max_iterations", c.max_iterations},
                 {"gradient_threshold", c.gradient_threshold},
                 {"tetris", c.tetris},
                 {"inner_gradient_tolerance", c.inner_gradient_tolerance},
                 {"effective_inner_tolerance", c.effective_inner_tolerance()},
                 {"max_inner_iterations", c.max_inner_iterations},
                 {"reference_energy", c.reference_energy},
                 {"epsilon_chem", c.epsilon_chem},
                 {"spin_multiplicity", c.spin_multiplicity},
                 {"recycle_hessian", c.recycle_hessian}};
  j["cost_table"] = cost_table_json(table);
  j["stop_reason"] = std::string(adapt::to_string(trace.stop_reason));
  j["n_iterations"] = trace.records.size();
  const auto n_chem = trace.n_adapt_at(c.epsilon_chem);
  j["n_adapt_epsilon_chem"] = n_chem ? json(*n_chem) : json(nullptr);
  if (!trace.records.empty()) {
    const auto& last = trace.records.back();
    j["final"] = {{"energy", last.energy},
                  {"energy_error", last.energy_error},
                  {"spin_sq", finite_or_null(last.spin_sq)},
                  {"cumulative_parameters", last.cumulative_parameters},
                  {"cumulative_cnots", last.cumulative_cnots}};
  }
  json ops = json::array();
  for (const auto& e : trace.ansatz.structure) {
    json params = json::array();
    for (std::size_t s = 0; s < e.op.slot_count(); ++s) params.push_back(trace.ansatz.parameters[e.first_parameter + s]);
    ops.push_back({{"pool_index", e.pool_index}, {"label", e.op.label()}, {"parameters", params}});
  }
  j["ansatz"] = ops;
  return j.dump(2) + "\n";
}

ReferenceData make_reference(const exact::CiVector& v, const std::string& label, int spin_multiplicity,
                             double floor, const std::string& entry_hash) {
  ReferenceData r;
  r.label = label;
  r.entry_hash = entry_hash;
  r.n_orbitals = v.sector.n_orbitals;
  r.n_alpha = v.sector.n_alpha;
  r.n_beta = v.sector.n_beta;
  r.spin_multiplicity = spin_multiplicity;
  r.energy = v.energy;
  r.spin_sq = v.spin_sq;
  r.n_determinants = v.determinants.size();
  r.floor = floor;
  for (double p : exact::ci_distribution(v).probabilities) {
    if (p > floor) r.probabilities.push_back(p);
    else ++r.n_truncated;
  }
  return r;
}

std::string reference_json(const ReferenceData& ref, const std::vector<double>& alpha_grid) {
  json j;
  j["entry_hash"] = ref.entry_hash;
  j["label"] = ref.label;
  j["n_orbitals"] = ref.n_orbitals;
  j["n_alpha"] = ref.n_alpha;
  j["n_beta"] = ref.n_beta;
  j["spin_multiplicity"] = ref.spin_multiplicity;
  j["energy"] = ref.energy;
  j["spin_sq"] = ref.spin_sq;
  j["n_determinants"] = ref.n_determinants;
  j["probability_floor"] = ref.floor;
  j["n_truncated"] = ref.n_truncated;
  // Renormalize the kept mass for entropy evaluation; the dropped mass is
  // below floor * n_truncated.
  std::vector<double> p = ref.probabilities;
  double total = 0.0;
  for (double x : p) total += x;
  for (auto& x : p) x /= total;
  json ent = json::array();
  for (double a : alpha_grid) {
    double h;
    if (a == 1.0) h = complexity::renyi_limits(p, ref.floor).shannon;
    else if (a == 0.0) h = complexity::renyi_limits(p, ref.floor).hartley;
    else h = complexity::renyi_entropy(p, a);
    ent.push_back({{"alpha", a}, {"value", h}});
  }
  j["renyi"] = ent;
  const auto lim = complexity::renyi_limits(p, ref.floor);
  j["limits"] = {{"hartley", lim.hartley}, {"shannon", lim.shannon}, {"collision", lim.collision},
                 {"min", lim.min}, {"n_nonzero", lim.n_nonzero}};
  json scan = json::array();
  for (const auto& s : complexity::hartley_floor_scan(p))
    scan.push_back({{"floor", s.floor}, {"n_nonzero", s.n_nonzero}, {"hartley", s.hartley}});
  j["hartley_floor_scan"] = scan;
  j["probabilities"] = ref.probabilities;
  return j.dump(2) + "\n";
}

ReferenceData read_reference_json(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
    ReferenceData r;
    r.label = j.at("label").get<std::string>();
    r.entry_hash = j.value("entry_hash", std::string{});
    r.n_orbitals = j.at("n_orbitals").get<std::size_t>();
    r.n_alpha = j.value("n_alpha", std::size_t{0});
    r.n_beta = j.value("n_beta", std::size_t{0});
    r.spin_multiplicity = j.value("spin_multiplicity", 1);
    r.energy = j.at("energy").get<double>();
    r.spin_sq = j.value("spin_sq", 0.0);
    r.n_determinants = j.value("n_determinants", std::size_t{0});
    r.floor = j.value("probability_floor", 1e-16);
    r.n_truncated = j.value("n_truncated", std::size_t{0});
    r.probabilities = j.at("probabilities").get<std::vector<double>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- sweeps

bool SweepSummary::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.ok; });
}

std::string entry_hash(const ManifestEntry& entry, const pools::CostTable& table) {
  return hex64(fnv1a(entry.canonical() + "--\n" + table.to_text()));
}

std::uint64_t entry_memory_estimate(std::size_t n_qubits) {
  // psi, H psi, the adjoint pair and a few screening buffers.
  constexpr std::uint64_t kWorkspaces = 8;
  return (std::uint64_t{1} << n_qubits) * 16 * kWorkspaces;
}

namespace {

struct EntryPaths {
  fs::path trace_csv, trace_json, ref_json;
};

EntryPaths paths_for(const ExperimentManifest& m, const std::string& label) {
  return {m.output_dir / (label + ".trace.csv"), m.output_dir / (label + ".trace.json"),
          m.output_dir / (label + ".ref.json")};
}

SummaryRow row_from_outputs(const ManifestEntry& entry, const ExperimentManifest& m, const std::string& hash) {
  const auto p = paths_for(m, entry.label);
  const TraceFile trace = read_trace_csv_file(p.trace_csv);
  if (trace.entry_hash != hash) throw Error("stale outputs");
  const ReferenceData ref = read_reference_json(p.ref_json);
  if (ref.entry_hash != hash) throw Error("stale outputs");
  const json tj = json::parse(read_text(p.trace_json));
  if (tj.value("entry_hash", std::string{}) != hash) throw Error("stale outputs");

  SummaryRow row;
  row.label = entry.label;
  row.entry_hash = hash;
  row.ok = true;
  row.n_orbitals = ref.n_orbitals;
  std::vector<double> probs = ref.probabilities;
  double total = 0.0;
  for (double x : probs) total += x;
  for (auto& x : probs) x /= total;
  for (double a : m.alpha_grid) {
    if (a == 1.0) row.entropies.push_back(complexity::renyi_limits(probs, ref.floor).shannon);
    else if (a == 0.0) row.entropies.push_back(complexity::renyi_limits(probs, ref.floor).hartley);
    else row.entropies.push_back(complexity::renyi_entropy(probs, a));
  }
  const auto pts = trace.points();
  for (double eps : m.epsilon_grid) row.n_adapt.push_back(analysis::n_adapt_at(pts, eps));
  row.final_error = trace.records.empty() ? 0.0 : trace.records.back().energy_error;
  row.stop_reason = tj.value("stop_reason", std::string{});
  return row;
}

}  // namespace

SummaryRow run_entry(const ManifestEntry& entry, const ExperimentManifest& manifest,
                     const pools::CostTable& table, bool force) {
  const std::string hash = entry_hash(entry, table);
  const auto paths = paths_for(manifest, entry.label);
  if (!force && fs::exists(paths.trace_csv) && fs::exists(paths.trace_json) && fs::exists(paths.ref_json)) {
    try {
      SummaryRow row = row_from_outputs(entry, manifest, hash);
      row.skipped = true;
      return row;
    } catch (const std::exception&) {
      // incomplete or stale; recompute
    }
  }

  hamio::MolecularProblem problem = hamio::read_fcidump_file(entry.fcidump.string());
  problem.label = entry.label;
  if (entry.spin_multiplicity) problem.spin_multiplicity_target = *entry.spin_multiplicity;

  const exact::CiVector ci = exact::fci_ground_state(problem);
  const ReferenceData ref = make_reference(ci, entry.label, problem.spin_multiplicity_target,
                                           manifest.probability_floor, hash);

  const auto h = pauli::jordan_wigner(problem);
  const auto full = pools::build_pool(entry.pool, problem.n_orbitals, problem.n_alpha, problem.n_beta, table);
  pools::OperatorPool pool = full;
  if (entry.pool_fraction) pool = pools::random_subpool(full, *entry.pool_fraction, entry.pool_seed.value_or(1));

  adapt::AdaptConfig cfg;
  cfg.target_error = entry.target_error;
  cfg.max_iterations = entry.max_iterations;
  cfg.tetris = entry.tetris;
  cfg.reference_energy = ci.energy;
  cfg.spin_multiplicity = problem.spin_multiplicity_target;
  adapt::AdaptTrace trace =
      adapt::run_adapt(h, pool, adapt::aufbau_reference(problem.n_alpha, problem.n_beta), cfg);
  trace.molecule_label = entry.label;

  fs::create_directories(manifest.output_dir);
  write_text(paths.ref_json, reference_json(ref, manifest.alpha_grid));
  write_text(paths.trace_json, trace_json(trace, {entry.pool, full.size(), pool.size(), entry.pool_fraction,
                                                  entry.pool_fraction ? entry.pool_seed : std::nullopt},
                                          table, hash));
  write_text(paths.trace_csv, trace_csv(trace, hash));
  return row_from_outputs(entry, manifest, hash);
}

SweepSummary run_manifest(const ExperimentManifest& manifest, const RunOptions& options) {
  manifest.validate();
  const pools::CostTable table = load_cost_table(manifest.cost_table);
  fs::create_directories(manifest.output_dir);

  const std::size_t n = manifest.entries.size();
  SweepSummary summary;
  summary.alpha_grid = manifest.alpha_grid;
  summary.epsilon_grid = manifest.epsilon_grid;
  summary.rows.resize(n);

  std::vector<std::uint64_t> need(n, 0);
  std::vector<bool> admissible(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = manifest.entries[i];
    summary.rows[i].label = e.label;
    summary.rows[i].entry_hash = entry_hash(e, table);
    try {
      const auto p = hamio::read_fcidump_file(e.fcidump.string());
      need[i] = entry_memory_estimate(2 * p.n_orbitals);
      if (need[i] > options.memory_budget_bytes) {
        admissible[i] = false;
        summary.rows[i].error = "estimated memory exceeds the budget";
      }
    } catch (const std::exception& ex) {
      admissible[i] = false;
      summary.rows[i].error = ex.what();
    }
  }

  std::mutex mu;
  std::condition_variable cv;
  std::uint64_t in_use = 0;
  std::atomic<std::size_t> next{0};
  auto log = [&](const std::string& msg) {
    if (!options.log) return;
    std::lock_guard<std::mutex> lock(mu);
    *options.log << msg << std::endl;
  };

  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      if (!admissible[i]) {
        log("failed " + manifest.entries[i].label + ": " + summary.rows[i].error);
        continue;
      }
      {
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] { return in_use == 0 || in_use + need[i] <= options.memory_budget_bytes; });
        in_use += need[i];
      }
      SummaryRow row;
      try {
        row = run_entry(manifest.entries[i], manifest, table, options.force);
      } catch (const std::exception& ex) {
        row.label = manifest.entries[i].label;
        row.entry_hash = summary.rows[i].entry_hash;
        row.ok = false;
        row.error = ex.what();
      }
      log((row.ok ? (row.skipped ? "skipped " : "done ") : "failed ") + row.label +
          (row.ok ? std::string{} : ": " + row.error));
      {
        std::lock_guard<std::mutex> lock(mu);
        in_use -= need[i];
        summary.rows[i] = std::move(row);
      }
      cv.notify_all();
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, n));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  write_text(manifest.output_dir / "summary.csv", summary_csv(summary));
  json failures = json::array();
  for (const auto& r : summary.rows)
    if (!r.ok) failures.push_back({{"label", r.label}, {"error", r.error}});
  const fs::path failure_file = manifest.output_dir / "failures.json";
  if (!failures.empty()) write_text(failure_file, failures.dump(2) + "\n");
  else if (fs::exists(failure_file)) fs::remove(failure_file);
  return summary;
}

std::string summary_csv(const SweepSummary& summary) {
  std::string s = "label,status,entry_hash,n_orbitals";
  auto short_g = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  for (double a : summary.alpha_grid) s += ",h_" + short_g(a);
  for (double e : summary.epsilon_grid) s += ",n_adapt_" + short_g(e);
  s += ",final_error,stop_reason,error\n";
  for (const auto& r : summary.rows) {
    s += r.label + ',' + (r.ok ? "ok" : "failed") + ',' + r.entry_hash + ',' +
         (r.ok ? std::to_string(r.n_orbitals) : std::string{});
    for (std::size_t i = 0; i < summary.alpha_grid.size(); ++i)
      s += ',' + (i < r.entropies.size() ? fmt_double(r.entropies[i]) : std::string{});
    for (std::size_t i = 0; i < summary.epsilon_grid.size(); ++i)
      s += ',' + (i < r.n_adapt.size() && r.n_adapt[i] ? std::to_string(*r.n_adapt[i]) : std::string{});
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    s += ',' + (r.ok ? fmt_double(r.final_error) : std::string{}) + ',' + r.stop_reason + ',' + err + "\n";
  }
  return s;
}

}  // namespace adaptscale::cli
