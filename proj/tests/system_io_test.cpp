#include "qbmor/system_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "qbmor/errors.hpp"
#include "qbmor/experiments.hpp"
#include "qbmor/transform.hpp"

namespace qbmor {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qbmor_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
  }

  fs::path dir_;
};

using SystemIo = TempDir;

TEST_F(SystemIo, SystemRoundTripIsExact) {
  std::mt19937_64 rng(61);
  const LtiQuadraticSystem sys = generate_random_system(7, 2, Definiteness::kIndefinite, 2)
                                     .with_initial_state(oracle::random_matrix(7, 1, rng));
  save_system(dir_, sys);
  EXPECT_TRUE(fs::exists(dir_ / "system.json"));
  const LtiQuadraticSystem back = load_system(dir_);
  EXPECT_EQ(back.A(), sys.A());
  EXPECT_EQ(back.B(), sys.B());
  EXPECT_EQ(back.M(), sys.M());
  EXPECT_EQ(back.x0(), sys.x0());
}

TEST_F(SystemIo, MissingX0MeansZero) {
  const LtiQuadraticSystem sys = generate_random_system(4, 3);
  save_system(dir_, sys);
  write_text(dir_ / "system.json",
             R"({"format": "qbmor-system", "version": 1, "n": 4, "n_in": 1,
                 "files": {"A": "A.mtx", "B": "B.mtx", "M": "M.mtx"}})");
  EXPECT_EQ(load_system(dir_).x0(), Vector::Zero(4));
}

TEST_F(SystemIo, RejectsBadManifests) {
  EXPECT_THROW(load_system(dir_), FormatError);
  write_text(dir_ / "system.json", "{ not json");
  EXPECT_THROW(load_system(dir_), FormatError);
  write_text(dir_ / "system.json", R"({"format": "other", "version": 1, "files": {}})");
  EXPECT_THROW(load_system(dir_), FormatError);
  write_text(dir_ / "system.json", R"({"format": "qbmor-system", "version": 99, "files": {}})");
  EXPECT_THROW(load_system(dir_), FormatError);
  write_text(dir_ / "system.json", R"({"format": "qbmor-system", "version": 1})");
  EXPECT_THROW(load_system(dir_), FormatError);
  write_text(dir_ / "system.json",
             R"({"format": "qbmor-system", "version": 1, "files": {"A": "A.mtx"}})");
  EXPECT_THROW(load_system(dir_), FormatError);
}

TEST_F(SystemIo, UnstableSystemIsRejectedOnLoad) {
  const LtiQuadraticSystem sys(Matrix::Constant(1, 1, 1.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                               StabilityCheck::kAssumeStable);
  save_system(dir_, sys);
  EXPECT_THROW(load_system(dir_), InstabilityError);
  EXPECT_NO_THROW(load_system(dir_, StabilityCheck::kAssumeStable));
}

TEST_F(SystemIo, RomRoundTrip) {
  const LtiQuadraticSystem sys = generate_random_system(12, 4);
  const ReducedModel rom = reduce_qb(sys, Method::kQbDirect, 5, 1e-8, 0.01);
  save_rom(dir_ / "plain", rom);
  const ReducedModel back = load_rom(dir_ / "plain");
  EXPECT_EQ(back.A_star, rom.A_star);
  EXPECT_EQ(back.B_star, rom.B_star);
  EXPECT_EQ(back.N_star, rom.N_star);
  EXPECT_EQ(back.S_star, rom.S_star);
  EXPECT_EQ(back.x0, rom.x0);
  EXPECT_EQ(back.p_doubleprime, rom.p_doubleprime);
  EXPECT_EQ(back.epsilon_rom, rom.epsilon_rom);
  EXPECT_EQ(back.W.size(), 0);

  save_rom(dir_ / "full", rom, true);
  const ReducedModel with_proj = load_rom(dir_ / "full");
  EXPECT_EQ(with_proj.W, rom.W);
  EXPECT_EQ(with_proj.V, rom.V);
}

TEST_F(SystemIo, RomShapeValidation) {
  const LtiQuadraticSystem sys = generate_random_system(8, 4);
  save_rom(dir_, reduce_qb(sys, Method::kQbDirect, 4, 1e-8));
  std::ifstream in(dir_ / "rom.json");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  // Point S* at the B* file: shapes no longer fit.
  const auto pos = text.find("S_star.mtx");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 10, "B_star.mtx");
  write_text(dir_ / "rom.json", text);
  EXPECT_THROW(load_rom(dir_), FormatError);
}

}  // namespace
}  // namespace qbmor
