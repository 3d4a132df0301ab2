#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "adaptscale/cli.hpp"
#include "adaptscale/errors.hpp"
#include "test_support.hpp"

using namespace adaptscale;
using namespace adaptscale::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("adaptscale_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

const fs::path kFixtures = ADAPTSCALE_FIXTURE_DIR;

std::string h2_manifest() {
  return "output_dir = \"out\"\n[entry]\nlabel = \"h2\"\nfcidump = \"h2.fcidump\"\npool = \"ceo\"\n";
}

}  // namespace

TEST(Cli, ManifestParsesEntriesAndDefaults) {
  const auto m = parse_manifest(
      "# comment\nalpha_grid = [0.25, 1.0]\n\n[entry]\nlabel = \"a\"  # trailing\nfcidump = \"h2.fcidump\"\n"
      "pool = \"qeb\"\ntetris = true\ntarget_error = 1e-4\nmax_iterations = 30\n\n"
      "[entry]\nlabel = \"b\"\nfcidump = \"h4.fcidump\"\npool = \"ceo\"\npool_fraction = 0.5\n"
      "spin_multiplicity = 1\n",
      kFixtures);
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.alpha_grid, (std::vector<double>{0.25, 1.0}));
  EXPECT_EQ(m.entries[0].label, "a");
  EXPECT_EQ(m.entries[0].fcidump, kFixtures / "h2.fcidump");
  EXPECT_TRUE(m.entries[0].tetris);
  EXPECT_EQ(m.entries[0].target_error, 1e-4);
  EXPECT_EQ(m.entries[0].max_iterations, 30u);
  EXPECT_EQ(m.entries[0].line, 4u);
  EXPECT_EQ(m.entries[1].pool, pools::PoolKind::ceo);
  EXPECT_EQ(m.entries[1].pool_fraction, std::optional<double>(0.5));
  EXPECT_EQ(m.entries[1].pool_seed, std::optional<std::uint64_t>(1));
  EXPECT_EQ(m.entries[1].spin_multiplicity, std::optional<int>(1));
  EXPECT_EQ(m.output_dir, kFixtures / "adaptscale_out");
}

TEST(Cli, ManifestErrors) {
  EXPECT_THROW(parse_manifest("", kFixtures), ManifestError);
  EXPECT_THROW(parse_manifest("# nothing\n", kFixtures), ManifestError);
  const std::string ok = "[entry]\nlabel = \"a\"\nfcidump = \"h2.fcidump\"\n";
  EXPECT_THROW(parse_manifest(ok + ok, kFixtures), ManifestError);  // duplicate label
  EXPECT_THROW(parse_manifest("[entry]\nlabel = \"a\"\nfcidump = \"missing.fcidump\"\n", kFixtures), ManifestError);
  EXPECT_THROW(parse_manifest(ok + "colour = 3\n", kFixtures), ManifestError);
  EXPECT_THROW(parse_manifest(ok + "pool = \"fancy\"\n", kFixtures), ManifestError);
  EXPECT_THROW(parse_manifest(ok + "tetris = maybe\n", kFixtures), ManifestError);
  EXPECT_THROW(parse_manifest(ok + "pool_fraction = 1.5\n", kFixtures), ManifestError);
  EXPECT_THROW(parse_manifest("[section]\n", kFixtures), ManifestError);
  try {
    parse_manifest(ok + "max_iterations = -3\n", kFixtures);
    FAIL();
  } catch (const ManifestError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Cli, VersionBanner) {
  const auto a = version_banner();
  EXPECT_NE(a.find("epsilon_chem=1.6e-3"), std::string::npos);
  EXPECT_NE(a.find("alpha_star=0.25"), std::string::npos);
  EXPECT_NE(a.find(kVersion), std::string::npos);
  EXPECT_NE(a.find("cost_table_hash=" + hex64(fnv1a(pools::CostTable::defaults().to_text()))), std::string::npos);
  EXPECT_EQ(a, version_banner());
  auto custom = pools::CostTable::parse("ceo_combined = 20\n");
  EXPECT_NE(version_banner(custom), a);
}

TEST(Cli, HashIsStableFnv1a) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
  ManifestEntry e;
  e.label = "x";
  e.fcidump = "/some/where/h2.fcidump";
  const auto table = pools::CostTable::defaults();
  const auto h = entry_hash(e, table);
  ManifestEntry moved = e;
  moved.fcidump = "/elsewhere/h2.fcidump";
  EXPECT_EQ(entry_hash(moved, table), h);
  ManifestEntry changed = e;
  changed.tetris = true;
  EXPECT_NE(entry_hash(changed, table), h);
  EXPECT_NE(entry_hash(e, pools::CostTable::parse("ceo_combined = 20\n")), h);
}

TEST(Cli, ConfigParsing) {
  const auto c = parse_config("jobs = 3\nseed = 9\nmemory_budget_mb = 64\n# c\n");
  EXPECT_EQ(c.jobs, 3u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.memory_budget_bytes, 64ull << 20);
  EXPECT_THROW(parse_config("speed = 11\n"), Error);
  EXPECT_THROW(parse_config("jobs\n"), Error);
}

TEST(Cli, TraceCsvRoundTrip) {
  adapt::AdaptTrace t;
  t.molecule_label = "m";
  for (int i = 1; i <= 3; ++i) {
    adapt::IterationRecord r;
    r.iteration_index = i;
    r.energy = -1.0 / 3.0 * i;
    r.energy_error = 0.1 / (i * 7.0);
    r.max_gradient = 1e-3 * i;
    r.spin_sq = i == 2 ? std::nan("") : 0.0;
    r.operators_added = i;
    r.cumulative_parameters = 2 * i;
    r.cumulative_cnots = 13 * i;
    r.inner_iterations = 5;
    r.stalled = i == 3;
    for (int k = 0; k < i; ++k) r.selected.push_back(10 * k + i);
    t.records.push_back(r);
  }
  std::istringstream in(trace_csv(t, "00000000deadbeef"));
  const auto f = read_trace_csv(in);
  EXPECT_EQ(f.entry_hash, "00000000deadbeef");
  EXPECT_EQ(f.label, "m");
  ASSERT_EQ(f.records.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(f.records[i].energy, t.records[i].energy);
    EXPECT_EQ(f.records[i].energy_error, t.records[i].energy_error);
    EXPECT_EQ(f.records[i].selected, t.records[i].selected);
    EXPECT_EQ(f.records[i].stalled, t.records[i].stalled);
    EXPECT_EQ(f.records[i].cumulative_cnots, t.records[i].cumulative_cnots);
  }
  EXPECT_TRUE(std::isnan(f.records[1].spin_sq));
  EXPECT_EQ(f.points()[2].cumulative_parameters, 6u);
}

TEST(Cli, SingleEntrySweep) {
  TempDir dir("single");
  fs::copy_file(kFixtures / "h2.fcidump", dir.path() / "h2.fcidump");
  const auto m = parse_manifest(h2_manifest(), dir.path());
  const auto s = run_manifest(m, {});
  ASSERT_EQ(s.rows.size(), 1u);
  EXPECT_TRUE(s.all_ok());
  EXPECT_EQ(s.rows[0].stop_reason, "target_error");
  EXPECT_EQ(s.rows[0].n_orbitals, 2u);
  const fs::path out = dir.path() / "out";
  std::size_t n_entry_files = 0;
  for (const auto& f : fs::directory_iterator(out))
    if (f.path().filename() != "summary.csv") ++n_entry_files;
  EXPECT_EQ(n_entry_files, 3u);
  const auto hash = s.rows[0].entry_hash;
  for (const char* name : {"h2.trace.csv", "h2.trace.json", "h2.ref.json", "summary.csv"})
    EXPECT_NE(slurp(out / name).find(hash), std::string::npos) << name;
  const auto ref = read_reference_json(out / "h2.ref.json");
  EXPECT_NEAR(ref.energy, -1.1372838344885023, 1e-9);
  const auto tj = nlohmann::json::parse(slurp(out / "h2.trace.json"));
  EXPECT_EQ(tj["stop_reason"], "target_error");
  EXPECT_EQ(tj["pool"]["kind"], "ceo");
  EXPECT_TRUE(tj.contains("cost_table"));
}

TEST(Cli, RerunSkipsCompletedEntriesAndIsIdentical) {
  TempDir dir("rerun");
  fs::copy_file(kFixtures / "h2.fcidump", dir.path() / "h2.fcidump");
  const auto m = parse_manifest(h2_manifest(), dir.path());
  const auto first = run_manifest(m, {});
  const auto summary = slurp(dir.path() / "out" / "summary.csv");
  const auto trace = slurp(dir.path() / "out" / "h2.trace.csv");
  const auto stamp = fs::last_write_time(dir.path() / "out" / "h2.trace.csv");
  const auto second = run_manifest(m, {});
  EXPECT_TRUE(second.rows[0].skipped);
  EXPECT_EQ(fs::last_write_time(dir.path() / "out" / "h2.trace.csv"), stamp);
  EXPECT_EQ(slurp(dir.path() / "out" / "summary.csv"), summary);
  RunOptions force;
  force.force = true;
  const auto third = run_manifest(m, force);
  EXPECT_FALSE(third.rows[0].skipped);
  EXPECT_EQ(slurp(dir.path() / "out" / "h2.trace.csv"), trace);
  EXPECT_EQ(slurp(dir.path() / "out" / "summary.csv"), summary);
}

TEST(Cli, StaleOutputsAreRecomputed) {
  TempDir dir("stale");
  fs::copy_file(kFixtures / "h2.fcidump", dir.path() / "h2.fcidump");
  auto m = parse_manifest(h2_manifest(), dir.path());
  run_manifest(m, {});
  m.entries[0].target_error = 1e-8;
  const auto s = run_manifest(m, {});
  EXPECT_FALSE(s.rows[0].skipped);
  EXPECT_EQ(read_trace_csv_file(dir.path() / "out" / "h2.trace.csv").entry_hash, s.rows[0].entry_hash);
}

TEST(Cli, FailuresAreRecordedWithoutAbortingTheSweep) {
  TempDir dir("fail");
  fs::copy_file(kFixtures / "h2.fcidump", dir.path() / "h2.fcidump");
  std::ofstream(dir.path() / "broken.fcidump") << "&FCI NORB=2,NELEC=2,\n&END\n 1.0 9 9 9 9\n";
  const auto m = parse_manifest(
      h2_manifest() + "[entry]\nlabel = \"broken\"\nfcidump = \"broken.fcidump\"\n", dir.path());
  const auto s = run_manifest(m, {});
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_TRUE(s.rows[0].ok);
  EXPECT_FALSE(s.rows[1].ok);
  EXPECT_FALSE(s.rows[1].error.empty());
  EXPECT_FALSE(s.all_ok());
  const auto failures = nlohmann::json::parse(slurp(dir.path() / "out" / "failures.json"));
  ASSERT_EQ(failures.size(), 1u);
  EXPECT_EQ(failures[0]["label"], "broken");
  EXPECT_NE(slurp(dir.path() / "out" / "summary.csv").find("broken,failed"), std::string::npos);
}

TEST(Cli, MemoryAdmissionRejectsOversizedEntries) {
  TempDir dir("mem");
  fs::copy_file(kFixtures / "h2.fcidump", dir.path() / "h2.fcidump");
  const auto m = parse_manifest(h2_manifest(), dir.path());
  RunOptions opt;
  opt.memory_budget_bytes = 64;
  const auto s = run_manifest(m, opt);
  EXPECT_FALSE(s.rows[0].ok);
  EXPECT_NE(s.rows[0].error.find("memory"), std::string::npos);
  EXPECT_EQ(entry_memory_estimate(20), (std::uint64_t{1} << 20) * 16 * 8);
}

TEST(Cli, ParallelSweepMatchesSerialSweep) {
  TempDir a("serial"), b("parallel");
  auto m = read_manifest(kFixtures / "sweep.manifest");
  m.output_dir = a.path();
  const auto s1 = run_manifest(m, {});
  m.output_dir = b.path();
  RunOptions opt;
  opt.jobs = 3;
  const auto s2 = run_manifest(m, opt);
  EXPECT_TRUE(s1.all_ok());
  EXPECT_EQ(summary_csv(s1), summary_csv(s2));
  for (const auto& e : m.entries)
    EXPECT_EQ(slurp(a.path() / (e.label + ".trace.csv")), slurp(b.path() / (e.label + ".trace.csv")));
  // The summary in manifest order, reconstructed from files alone on rerun.
  const auto s3 = run_manifest(m, opt);
  for (std::size_t i = 0; i < s3.rows.size(); ++i) {
    EXPECT_TRUE(s3.rows[i].skipped);
    EXPECT_EQ(s3.rows[i].label, m.entries[i].label);
  }
  EXPECT_EQ(summary_csv(s3), summary_csv(s1));
}
