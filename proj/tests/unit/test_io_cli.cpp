#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "kraichnan/errors.hpp"
#include "kraichnan/experiments.hpp"
#include "kraichnan/io.hpp"

using namespace kraichnan;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("kraichnan_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
fs::path write_cfg(const fs::path& dir, const std::string& text) {
  auto p = dir / "cfg.json";
  std::ofstream(p) << text;
  return p;
}
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("shortest round-trip formatting") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(u(rng), int(u(rng)));
    const auto s = io::format_double(v);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK_THROWS_AS(io::format_double(NAN), DomainError);
}

TEST_CASE("csv writer") {
  io::CsvWriter w({"a", "b"});
  w.row({1.0, 0.5});
  w.row_cells({"2", ""});
  CHECK(w.str() == "a,b\n1,0.5\n2,\n");
  CHECK_THROWS_AS(w.row({1.0}), DomainError);
}

TEST_CASE("atomic write leaves no temp file") {
  const auto dir = scratch("atomic");
  io::write_atomic(dir / "x.txt", "hello");
  CHECK(slurp(dir / "x.txt") == "hello");
  CHECK_FALSE(fs::exists(dir / "x.txt.tmp"));
}

TEST_CASE("config validation messages and defaults") {
  const auto dir = scratch("validate");
  std::ostringstream out, err;
  auto bad_alpha = write_cfg(dir, R"({"experiment":"k-constants","d":2,"alpha":1.5,"s":0.5})");
  CHECK(cli::validate_command(bad_alpha, out, err) == cli::kConfigError);
  CHECK(err.str().find("alpha must lie in (0,1)") != std::string::npos);

  err.str("");
  auto edge_s = write_cfg(dir, R"({"experiment":"k-constants","d":2,"alpha":0.5,"s":1.0})");
  CHECK(cli::validate_command(edge_s, out, err) == cli::kConfigError);
  CHECK(err.str().find("(0, d/2)") != std::string::npos);

  err.str("");
  auto unknown = write_cfg(dir, R"({"experiment":"k-constants","d":2,"alpha":0.5,"s":0.5,"colour":1})");
  CHECK(cli::validate_command(unknown, out, err) == cli::kConfigError);
  CHECK(err.str().find("unknown field \"colour\"") != std::string::npos);

  err.str("");
  auto not_json = write_cfg(dir, "{experiment");
  CHECK(cli::validate_command(not_json, out, err) == cli::kConfigError);

  out.str("");
  auto good = write_cfg(dir, R"({"experiment":"spectral-evolve","d":2,"alpha":0.5,"s":0.75})");
  CHECK(cli::validate_command(good, out, err) == cli::kOk);
  CHECK(out.str().rfind("ok\n", 0) == 0);
  const auto resolved = cli::json::parse(out.str().substr(3));
  CHECK(resolved["seed"] == 0);
  CHECK(resolved["grid"]["nodes"] == 512);
  CHECK(resolved["trackers"].size() == 2);
}

TEST_CASE("schema subset validator") {
  const auto& s = cli::schema();
  CHECK(cli::schema_errors(cli::json::parse(R"({"experiment":"asymptotics","d":2,"alpha":0.5,"s":0.5})"), s).empty());
  CHECK(cli::schema_errors(cli::json::parse(R"({"experiment":"nope","d":2,"alpha":0.5,"s":0.5})"), s).size() == 1);
  CHECK(cli::schema_errors(cli::json::parse(R"({"experiment":"asymptotics","d":2.5,"alpha":0.5,"s":0.5})"), s).size() == 1);
  CHECK(cli::schema_errors(cli::json::parse(R"({"experiment":"asymptotics","alpha":0.5,"s":0.5})"), s).size() == 1);
  CHECK(cli::schema_errors(cli::json::parse(R"({"experiment":"mc-ensemble","d":2,"alpha":0.5,"s":0.5,"lattice":{"n_max":2}})"), s).size() == 1);
}

TEST_CASE("runs write artifacts and are byte-reproducible") {
  const auto dir = scratch("run");
  auto cfg = write_cfg(dir, R"({"experiment":"k-constants","d":2,"alpha":0.5,"s":0.75})");
  std::ostringstream out, err;
  CHECK(cli::run_command(cfg, (dir / "a").string(), out, err) == cli::kOk);
  CHECK(cli::run_command(cfg, (dir / "b").string(), out, err) == cli::kOk);
  for (const char* f : {"k_constants.csv", "summary.json"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  const auto summary = cli::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["passed"] == true);
  CHECK(summary["values"].contains("K_gamma"));
  CHECK(summary["values"].contains("K_integral"));
  CHECK(summary["values"].contains("K_riesz"));
  for (const auto& c : summary["checks"]) CHECK(c.contains("source"));
  const auto manifest = cli::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["config"]["seed"] == 0);
  CHECK(manifest["version"] == KRAICHNAN_VERSION);
  CHECK(manifest["timings"].contains("total_s"));
}

TEST_CASE("empty flux table is a header-only csv") {
  const auto dir = scratch("empty");
  auto cfg = write_cfg(dir, R"({"experiment":"flux-table","d":2,"alpha":0.5,"s":0.5,"xi":[]})");
  std::ostringstream out, err;
  CHECK(cli::run_command(cfg, (dir / "o").string(), out, err) == cli::kOk);
  CHECK(slurp(dir / "o" / "flux.csv") == "xi,F,residual,K,d,alpha,s,m\n");
}

TEST_CASE("a failing asserted check exits with 1, a compute error with 3") {
  const auto dir = scratch("codes");
  std::ostringstream out, err;
  // sixteen nodes over five decades cannot resolve the self-similar ratio
  auto coarse = write_cfg(dir, R"({"experiment":"selfsimilar-balance","d":2,"alpha":0.5,"s":0.75,
      "grid":{"nodes":16}})");
  CHECK(cli::run_command(coarse, (dir / "c").string(), out, err) == cli::kInvariantFailure);
  // an explicit step far above the stability limit
  auto unstable = write_cfg(dir, R"({"experiment":"spectral-evolve","d":2,"alpha":0.5,"s":0.75,
      "grid":{"rho_min":0.1,"rho_max":10,"nodes":16},"time":{"t_final":1,"dt":10}})");
  CHECK(cli::run_command(unstable, (dir / "u").string(), out, err) == cli::kComputeError);
  CHECK(fs::exists(dir / "u" / "manifest.json"));
}
