#include "qbmor/report.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "qbmor/errors.hpp"

namespace qbmor {

namespace fs = std::filesystem;

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx != nullptr && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw NumericalError("git_blob_sha1: digest computation failed");
  std::string hex(2 * len, '0');
  static constexpr char kDigits[] = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex[2 * i] = kDigits[digest[i] >> 4];
    hex[2 * i + 1] = kDigits[digest[i] & 0xF];
  }
  return hex;
}

std::string file_git_blob_sha1(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return git_blob_sha1(ss.str());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_sv_csv(std::ostream& out, const std::vector<SingularValueSet>& sets) {
  out << "method,index,sigma\n";
  for (const auto& s : sets) {
    for (Index i = 0; i < s.sigma.size(); ++i) {
      out << to_string(s.method) << ',' << (i + 1) << ',' << format_double(s.sigma(i)) << '\n';
    }
  }
}

void write_errors_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "method,r,E_abs,E_rel\n";
  for (const auto& c : cells) {
    if (!c.ok) continue;
    out << to_string(c.method) << ',' << c.r << ',' << format_double(c.e_abs) << ','
        << format_double(c.e_rel) << '\n';
  }
}

void write_failures_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "method,r,message\n";
  for (const auto& c : cells) {
    if (c.ok) continue;
    std::string msg = c.failure;
    for (char& ch : msg) {
      if (ch == '"') ch = '\'';
      if (ch == '\n') ch = ' ';
    }
    out << to_string(c.method) << ',' << c.r << ",\"" << msg << "\"\n";
  }
}

void write_timing_csv(std::ostream& out, const std::vector<PhaseTiming>& timings) {
  out << "method,r,phase,seconds\n";
  for (const auto& t : timings) {
    out << to_string(t.method) << ',' << t.r << ',' << t.phase << ',' << format_double(t.seconds)
        << '\n';
  }
}

void write_manifest(const fs::path& dir, const std::string& config_json,
                    const std::vector<std::string>& files) {
  nlohmann::json entries = nlohmann::json::object();
  for (const auto& name : files) {
    const fs::path p = dir / name;
    entries[name] = {{"git_sha1", file_git_blob_sha1(p)},
                     {"bytes", static_cast<std::uint64_t>(fs::file_size(p))}};
  }
  nlohmann::json j = {{"format", "qbmor-run"},
                      {"version", 1},
                      {"config", nlohmann::json::parse(config_json)},
                      {"files", entries}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw FormatError("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

namespace {

template <typename Writer>
void write_file(const fs::path& dir, const std::string& name, std::vector<std::string>& written,
                Writer&& writer) {
  std::ofstream out(dir / name);
  if (!out) throw FormatError("cannot write " + (dir / name).string());
  writer(out);
  written.push_back(name);
}

}  // namespace

std::vector<std::string> write_report(const fs::path& dir, const ExperimentConfig& cfg,
                                      const ExperimentReport& report) {
  fs::create_directories(dir);
  std::vector<std::string> written;
  write_file(dir, "sv.csv", written, [&](std::ostream& o) { write_sv_csv(o, report.singular_values); });
  write_file(dir, "errors.csv", written, [&](std::ostream& o) { write_errors_csv(o, report.cells); });
  write_file(dir, "failures.csv", written,
             [&](std::ostream& o) { write_failures_csv(o, report.cells); });
  write_file(dir, "timing.csv", written, [&](std::ostream& o) { write_timing_csv(o, report.timings); });
  if (cfg.write_trajectories) {
    fs::create_directories(dir / "trajectories");
    write_file(dir, "trajectories/fom.csv", written,
               [&](std::ostream& o) { write_trajectory_csv(o, report.reference); });
    for (const auto& c : report.cells) {
      if (!c.ok || c.trajectory.size() == 0) continue;
      const std::string name =
          "trajectories/" + to_string(c.method) + "_r" + std::to_string(c.r) + ".csv";
      write_file(dir, name, written, [&](std::ostream& o) { write_trajectory_csv(o, c.trajectory); });
    }
  }
  write_manifest(dir, config_to_json(cfg), written);
  written.push_back("manifest.json");
  return written;
}

}  // namespace qbmor
