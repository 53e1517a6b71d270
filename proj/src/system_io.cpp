#include "qbmor/system_io.hpp"

#include <fstream>
#include <json.hpp>
#include <string>

#include "qbmor/errors.hpp"
#include "qbmor/matrix_market.hpp"

namespace qbmor {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw FormatError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

void check_header(const json& j, const char* format, const fs::path& file) {
  if (!j.is_object() || j.value("format", std::string()) != format) {
    throw FormatError(file.string() + ": expected format \"" + format + "\"");
  }
  if (j.value("version", 0) != kBundleVersion) {
    throw FormatError(file.string() + ": unsupported version");
  }
}

Matrix read_entry(const fs::path& dir, const json& files, const char* key) {
  if (!files.contains(key) || !files[key].is_string()) {
    throw FormatError(std::string("missing file entry \"") + key + "\"");
  }
  return mm::read_file(dir / files[key].get<std::string>());
}

Vector as_vector(const Matrix& m, const char* what) {
  if (m.cols() != 1) throw FormatError(std::string(what) + " must be a column vector");
  return m.col(0);
}

}  // namespace

void save_system(const fs::path& dir, const LtiQuadraticSystem& sys) {
  fs::create_directories(dir);
  mm::write_file(dir / "A.mtx", sys.A());
  mm::write_file(dir / "B.mtx", sys.B());
  mm::write_file(dir / "M.mtx", sys.M());
  mm::write_file(dir / "x0.mtx", sys.x0());
  json j = {{"format", "qbmor-system"},
            {"version", kBundleVersion},
            {"n", sys.n()},
            {"n_in", sys.n_in()},
            {"files", {{"A", "A.mtx"}, {"B", "B.mtx"}, {"M", "M.mtx"}, {"x0", "x0.mtx"}}}};
  write_json(dir / "system.json", j);
}

LtiQuadraticSystem load_system(const fs::path& dir, StabilityCheck check) {
  const fs::path manifest = dir / "system.json";
  const json j = read_json(manifest);
  check_header(j, "qbmor-system", manifest);
  if (!j.contains("files") || !j["files"].is_object()) {
    throw FormatError(manifest.string() + ": missing \"files\"");
  }
  const json& files = j["files"];
  Matrix a = read_entry(dir, files, "A");
  Matrix b = read_entry(dir, files, "B");
  Matrix m = read_entry(dir, files, "M");
  if (files.contains("x0")) {
    Vector x0 = as_vector(read_entry(dir, files, "x0"), "x0");
    return LtiQuadraticSystem(std::move(a), std::move(b), std::move(m), std::move(x0), check);
  }
  return LtiQuadraticSystem(std::move(a), std::move(b), std::move(m), check);
}

void save_rom(const fs::path& dir, const ReducedModel& rom, bool with_projection) {
  fs::create_directories(dir);
  json files = {{"A_star", "A_star.mtx"}, {"B_star", "B_star.mtx"}, {"N_star", "N_star.mtx"},
                {"S_star", "S_star.mtx"}, {"x0", "x0.mtx"}};
  mm::write_file(dir / "A_star.mtx", rom.A_star);
  mm::write_file(dir / "B_star.mtx", rom.B_star);
  mm::write_file(dir / "N_star.mtx", rom.N_star);
  mm::write_file(dir / "S_star.mtx", rom.S_star);
  mm::write_file(dir / "x0.mtx", rom.x0);
  if (with_projection) {
    mm::write_file(dir / "W.mtx", rom.W);
    mm::write_file(dir / "V.mtx", rom.V);
    files["W"] = "W.mtx";
    files["V"] = "V.mtx";
  }
  json j = {{"format", "qbmor-rom"},       {"version", kBundleVersion},
            {"r", rom.r()},                {"n_in", rom.n_in()},
            {"p_doubleprime", rom.p_doubleprime}, {"epsilon_rom", rom.epsilon_rom},
            {"files", files}};
  write_json(dir / "rom.json", j);
}

ReducedModel load_rom(const fs::path& dir) {
  const fs::path manifest = dir / "rom.json";
  const json j = read_json(manifest);
  check_header(j, "qbmor-rom", manifest);
  if (!j.contains("files") || !j["files"].is_object()) {
    throw FormatError(manifest.string() + ": missing \"files\"");
  }
  const json& files = j["files"];
  ReducedModel rom;
  rom.A_star = read_entry(dir, files, "A_star");
  rom.B_star = read_entry(dir, files, "B_star");
  rom.N_star = read_entry(dir, files, "N_star");
  rom.S_star = read_entry(dir, files, "S_star");
  rom.x0 = as_vector(read_entry(dir, files, "x0"), "x0");
  if (files.contains("W")) rom.W = read_entry(dir, files, "W");
  if (files.contains("V")) rom.V = read_entry(dir, files, "V");
  try {
    rom.p_doubleprime = j.at("p_doubleprime").get<double>();
    rom.epsilon_rom = j.at("epsilon_rom").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  const Index k = rom.A_star.rows();
  if (rom.A_star.cols() != k || rom.B_star.rows() != k || rom.S_star.rows() != k ||
      rom.S_star.cols() != k || rom.N_star.rows() != rom.B_star.cols() || rom.N_star.cols() != k ||
      rom.x0.size() != k + 1) {
    throw FormatError(manifest.string() + ": inconsistent reduced matrix shapes");
  }
  if (!(rom.p_doubleprime > 0.0)) throw FormatError(manifest.string() + ": p_doubleprime <= 0");
  return rom;
}

}  // namespace qbmor
