#include <gtest/gtest.h>

#include <bdr/cli.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace bdr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("bdr_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

std::string run_to_string(const std::string& cmd, const RunConfig& cfg, int* code = nullptr) {
  std::ostringstream out, err;
  const int c = run(cmd, cfg, out, err);
  if (code) *code = c;
  return out.str();
}

}  // namespace

TEST(Config, EmptyInputGivesDefaults) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.rank, 2);
  EXPECT_EQ(c.epsilon, 1.0);
  EXPECT_EQ(c.t, 0.25);
  EXPECT_EQ(c.level, 2);
  EXPECT_EQ(c.n_max, 12);
  EXPECT_EQ(c.tol, 0.05);
  EXPECT_EQ(c.format, "csv");
}

TEST(Config, ParsesValuesAndComments) {
  const RunConfig c = parse_config("# comment\nrank = 3\n t=0.4  # trailing\nlevels = 1..3\nt-grid = 0.1:0.1:0.3\n");
  EXPECT_EQ(c.rank, 3);
  EXPECT_EQ(c.t, 0.4);
  EXPECT_EQ(c.levels, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(c.t_grid, (std::vector<double>{0.1, 0.2, 0.3}));
}

TEST(Config, RankOneRejected) {
  try {
    parse_config("rank = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'rank'"), std::string::npos);
  }
}

TEST(Config, UnknownKeyRejected) {
  try {
    parse_config("colour = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown key 'colour'"), std::string::npos);
  }
}

TEST(Config, ErrorsCarryLineAndColumn) {
  try {
    parse_config("rank = 2\n  bogus = 4\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 3);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  try {
    parse_config("t = 0.25\nn_max = twelve\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_config("rank 2\n"), ConfigError);
}

TEST(Config, PositivityObstructionForHt) {
  try {
    parse_config("t = 0.75\nexperiment = ht\n");
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("not positive"), std::string::npos);
  }
  EXPECT_THROW(parse_config("t = 0.75\nexperiment = bml\npairing = 1\n"), PreconditionError);
  EXPECT_NO_THROW(parse_config("t = 0.75\nexperiment = bml\npairing = 2\n"));
}

TEST(Config, ValidationOfRanges) {
  EXPECT_THROW(parse_config("epsilon = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("n_max = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("tol = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("format = xml\n"), ConfigError);
  EXPECT_THROW(parse_config("experiment = nope\n"), ConfigError);
}

TEST(Config, EnvironmentOverrides) {
  ::setenv("BDREP_N_MAX", "7", 1);
  ::setenv("BDREP_T", "0.125", 1);
  RunConfig c;
  apply_env_overrides(c);
  ::unsetenv("BDREP_N_MAX");
  ::unsetenv("BDREP_T");
  EXPECT_EQ(c.n_max, 7);
  EXPECT_EQ(c.t, 0.125);
}

TEST(Report, CsvLayout) {
  RunConfig cfg;
  cfg.n_max = 4;
  const std::string csv = run_to_string("bml", cfg);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, std::string("# bdrep ") + BDR_VERSION + " schema 1");
  std::getline(in, line);
  EXPECT_EQ(line, "# id: bml");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# config: {", 0), 0u);
  while (std::getline(in, line) && line[0] == '#') {
  }
  EXPECT_EQ(line, "n,lhs_re,lhs_im,rhs_re,rhs_im,abs_error,rel_error,work");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(Report, TimingsColumnOnlyOnRequest) {
  RunConfig cfg;
  cfg.n_max = 3;
  cfg.timings = true;
  EXPECT_NE(run_to_string("equi", cfg).find(",work,wall_ms\n"), std::string::npos);
}

TEST(Report, JsonSchema) {
  RunConfig cfg;
  cfg.n_max = 5;
  cfg.format = "json";
  const auto j = nlohmann::json::parse(run_to_string("phi", cfg));
  EXPECT_EQ(j["schema"], 1);
  EXPECT_EQ(j["id"], "phi");
  EXPECT_EQ(j["rows"].size(), 6u);
  EXPECT_TRUE(j["verdict"]["pass"].get<bool>());
  EXPECT_EQ(j["config"]["n_max"], 5);
  EXPECT_TRUE(j["rows"][0].contains("ratio"));
}

TEST(Report, ErrorObjectInJsonMode) {
  RunConfig cfg;
  cfg.format = "json";
  cfg.t = 0.0;
  int code = 0;
  const auto j = nlohmann::json::parse(run_to_string("sigma", cfg, &code));
  EXPECT_EQ(code, kExitUsage);
  EXPECT_EQ(j["error"]["code"], "divergent");
  cfg.t = 0.75;
  EXPECT_EQ(nlohmann::json::parse(run_to_string("ht", cfg, &code))["error"]["code"], "precondition");
  EXPECT_EQ(code, kExitUsage);
}

TEST(Report, VerdictFailureExitCode) {
  RunConfig cfg;
  cfg.t = 0.25;
  cfg.n_max = 3;
  cfg.tol = 1e-9;  // far below what three rows can reach
  int code = 0;
  run_to_string("bml", cfg, &code);
  EXPECT_EQ(code, kExitVerdict);
}

TEST(Report, AtomicWrite) {
  const fs::path d = fresh_dir("atomic");
  RunConfig cfg;
  cfg.n_max = 4;
  cfg.out = (d / "phi.csv").string();
  int code = -1;
  EXPECT_EQ(run_to_string("phi", cfg, &code), "");
  EXPECT_EQ(code, 0);
  EXPECT_EQ(slurp(d / "phi.csv").rfind("# bdrep", 0), 0u);
  for (const auto& e : fs::directory_iterator(d)) EXPECT_EQ(e.path().filename(), "phi.csv");
  EXPECT_THROW(atomic_write(d / "missing" / "x.csv", "x"), IoError);
  fs::remove_all(d);
}

TEST(Cache, GramRoundTripAndColdWarmEquality) {
  const fs::path d = fresh_dir("gram");
  RunConfig cfg;
  cfg.cache_dir = d.string();
  cfg.level = 3;
  cfg.format = "json";
  auto strip_cache = [](const std::string& s) {
    auto j = nlohmann::json::parse(s);
    j["extra"].erase("cache");
    return j.dump();
  };
  const std::string cold = run_to_string("gram", cfg);
  const std::string warm = run_to_string("gram", cfg);
  EXPECT_EQ(nlohmann::json::parse(cold)["extra"]["cache"]["misses"], 1);
  EXPECT_EQ(nlohmann::json::parse(warm)["extra"]["cache"]["hits"], 1);
  EXPECT_EQ(strip_cache(cold), strip_cache(warm));
  cfg.cache_dir.clear();
  EXPECT_EQ(strip_cache(run_to_string("gram", cfg)), strip_cache(cold));
  fs::remove_all(d);
}

TEST(Cache, WarmLoadTiming) {
  const fs::path d = fresh_dir("timing");
  GroupContext ctx(2);
  Cache cache(d);
  GramMatrix cold, warm;
  const double cold_ms = timed_ms([&] { cold = cache.gram(ctx, 0.25, 6); });
  const double warm_ms = timed_ms([&] { warm = cache.gram(ctx, 0.25, 6); });
  EXPECT_EQ(cache.stats().hits, 1u);
  EXPECT_EQ(cold.entries, warm.entries);
  RecordProperty("cold_ms", std::to_string(cold_ms));
  RecordProperty("warm_ms", std::to_string(warm_ms));
  std::cout << "gram level 6: assembly+store " << cold_ms << " ms, load " << warm_ms << " ms, speedup "
            << cold_ms / warm_ms << "\n";
  fs::remove_all(d);
}

TEST(Cache, CorruptEntriesAreEvicted) {
  const fs::path d = fresh_dir("corrupt");
  GroupContext ctx(2);
  Cache cache(d);
  const GramMatrix G = cache.gram(ctx, 0.25, 2);
  const fs::path p = cache.gram_path(ctx, 0.25, 2);
  ASSERT_TRUE(fs::exists(p));
  // truncate the body
  fs::resize_file(p, fs::file_size(p) - 8);
  Cache again(d);
  const GramMatrix H = again.gram(ctx, 0.25, 2);
  EXPECT_EQ(again.stats().evictions, 1u);
  EXPECT_EQ(again.stats().misses, 1u);
  EXPECT_EQ(G.entries, H.entries);
  // header mismatch: a level-1 entry renamed into the level-2 slot
  Cache third(d);
  third.gram(ctx, 0.25, 1);
  fs::copy_file(third.gram_path(ctx, 0.25, 1), p, fs::copy_options::overwrite_existing);
  const GramMatrix K = third.gram(ctx, 0.25, 2);
  EXPECT_EQ(third.stats().evictions, 1u);
  EXPECT_EQ(K.entries, G.entries);
  EXPECT_TRUE(third.load_gram(ctx, 0.25, 2).has_value());
  fs::remove_all(d);
}

TEST(Cache, PairCounts) {
  const fs::path d = fresh_dir("pairs");
  GroupContext ctx(3);
  Cache cache(d);
  const auto a = cache.pair_counts(ctx, 5);
  const auto b = cache.pair_counts(ctx, 5);
  EXPECT_EQ(cache.stats().hits, 1u);
  EXPECT_EQ(a, b);
  for (int m = 0; m <= 5; ++m) EXPECT_EQ(a[m], pair_count_sphere(ctx, 5, m));
  std::ofstream(cache.pairs_path(ctx, 5)) << "bdr-pairs 1 3 5\n0 12x\n";
  EXPECT_EQ(cache.pair_counts(ctx, 5), a);
  EXPECT_EQ(cache.stats().evictions, 1u);
  fs::remove_all(d);
}

TEST(Cache, UnwritableDirectorySurfaces) {
  const fs::path d = fresh_dir("ro");
  std::ofstream(d / "file") << "x";
  EXPECT_THROW(Cache(d / "file" / "sub"), IoError);
  fs::remove_all(d);
}
