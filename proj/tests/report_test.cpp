#include "qbmor/report.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace qbmor {
namespace {

namespace fs = std::filesystem;

TEST(GitBlobSha1, MatchesGitHashObject) {
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(FormatDouble, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Csv, Layouts) {
  SingularValueSet set{Method::kQbDirect, Vector::Ones(2)};
  std::ostringstream sv;
  write_sv_csv(sv, {set});
  EXPECT_EQ(sv.str(), "method,index,sigma\nqb_direct,1,1\nqb_direct,2,1\n");

  CellResult ok{Method::kLinearDirect, 5, true, 0.5, 0.25, 0, "", {}};
  CellResult bad{Method::kQbAdi, 7, false, 0, 0, 0, "r \"too\" large\nsecond line", {}};
  std::ostringstream err;
  write_errors_csv(err, {ok, bad});
  EXPECT_EQ(err.str(), "method,r,E_abs,E_rel\nlinear_direct,5,0.5,0.25\n");
  std::ostringstream fail;
  write_failures_csv(fail, {ok, bad});
  EXPECT_EQ(fail.str(), "method,r,message\nqb_adi,7,\"r 'too' large second line\"\n");

  std::ostringstream tim;
  write_timing_csv(tim, {PhaseTiming{Method::kQbDirect, 0, "svd", 0.5}});
  EXPECT_EQ(tim.str(), "method,r,phase,seconds\nqb_direct,0,svd,0.5\n");
}

TEST(Report, WritesFilesAndManifestHashes) {
  const fs::path dir = fs::temp_directory_path() / "qbmor_report_test";
  fs::remove_all(dir);
  ExperimentConfig cfg;
  cfg.n = 12;
  cfg.seed = 1;
  cfg.r_list = {3, 6};
  cfg.t_end = 5.0;
  cfg.write_trajectories = true;
  const ExperimentReport report = run_reduction(cfg);
  const std::vector<std::string> files = write_report(dir, cfg, report);

  for (const char* name : {"sv.csv", "errors.csv", "failures.csv", "timing.csv", "manifest.json",
                           "trajectories/fom.csv", "trajectories/qb_direct_r6.csv"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  std::ifstream in(dir / "manifest.json");
  const nlohmann::json manifest = nlohmann::json::parse(in);
  EXPECT_EQ(manifest["format"], "qbmor-run");
  EXPECT_EQ(manifest["config"]["n"], 12);
  EXPECT_EQ(manifest["config"]["seed"], 1);
  EXPECT_EQ(manifest["files"].size(), files.size() - 1);
  for (const auto& [name, entry] : manifest["files"].items()) {
    EXPECT_EQ(entry["git_sha1"], file_git_blob_sha1(dir / name)) << name;
    EXPECT_EQ(entry["bytes"], fs::file_size(dir / name)) << name;
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace qbmor
