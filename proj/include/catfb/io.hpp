// Text formats: matrix persistence, JSON-lines cycle reports and Wigner CSV.
//
// Every floating-point value is written with printf("%.17g"), which round
// trips IEEE doubles exactly and is stable across platforms (shortest
// round-trip formatting is deliberately not used).
#pragma once

#include "catfb/core.hpp"
#include "catfb/protocol.hpp"
#include "catfb/wigner.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace catfb::io {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// `dim D`, then D^2 lines `row col real imag` in row-major order.
inline void save_matrix(std::ostream& os, const CMatrix& m) {
  if (m.rows() != m.cols()) throw ValidationError("save_matrix: matrix must be square");
  os << "dim " << m.rows() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      os << r << ' ' << c << ' ' << fmt17(m(r, c).real()) << ' ' << fmt17(m(r, c).imag()) << '\n';
}

inline std::string to_text(const CMatrix& m) {
  std::ostringstream os;
  save_matrix(os, m);
  return os.str();
}

inline CMatrix load_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("state file is empty");
  std::istringstream head(line);
  std::string tag;
  long dim = 0;
  std::string extra;
  if (!(head >> tag >> dim) || tag != "dim" || dim < 1 || (head >> extra))
    throw FormatError("state file must start with 'dim D'");
  if (dim > 4096) throw FormatError("state dimension is implausibly large");
  CMatrix m(dim, dim);
  std::vector<char> seen(static_cast<std::size_t>(dim * dim), 0);
  long count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    long r = -1, c = -1;
    std::string re_s, im_s;
    if (!(ls >> r >> c >> re_s >> im_s) || (ls >> extra))
      throw FormatError("malformed state line: '" + line + "'");
    if (r < 0 || c < 0 || r >= dim || c >= dim) throw FormatError("state index out of range");
    char* end = nullptr;
    const double re = std::strtod(re_s.c_str(), &end);
    if (*end != '\0') throw FormatError("bad number '" + re_s + "'");
    const double im = std::strtod(im_s.c_str(), &end);
    if (*end != '\0') throw FormatError("bad number '" + im_s + "'");
    auto& flag = seen[static_cast<std::size_t>(r * dim + c)];
    if (flag) throw FormatError("duplicate state entry");
    flag = 1;
    m(r, c) = cplx(re, im);
    ++count;
  }
  if (count != dim * dim) throw FormatError("state file has missing entries");
  return m;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  os << content;
  if (!os) throw FormatError("failed writing '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline void save_state(const std::string& path, const FieldDensity& rho) {
  write_file(path, to_text(rho.matrix()));
}

/// Loads and validates a field density; any defect is a FormatError.
inline FieldDensity load_state(const std::string& path) {
  std::istringstream is(read_file(path));
  CMatrix m = load_matrix(is);
  try {
    return FieldDensity(std::move(m));
  } catch (const ValidationError& e) {
    throw FormatError(std::string("state file is not a density matrix: ") + e.what());
  }
}

/// {"cycle":..,"gamma_t":..,"fidelity":..,"parity":..,"coherence":..}
inline std::string report_json(const CycleReport& r) {
  std::string s = "{\"cycle\":" + std::to_string(r.cycle) + ",\"gamma_t\":" + fmt17(r.gamma_t) +
                  ",\"fidelity\":" + fmt17(r.fidelity) + ",\"parity\":" + fmt17(r.parity) +
                  ",\"coherence\":" + fmt17(r.coherence);
  if (r.wigner_min) s += ",\"wigner_min\":" + fmt17(*r.wigner_min);
  return s + "}";
}

inline std::string reports_jsonl(const std::vector<CycleReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += report_json(r) + "\n";
  return out;
}

/// Header `x,p,w`; rows ordered by p, then x.
inline std::string wigner_csv(const WignerGrid& grid) {
  std::string out = "x,p,w\n";
  for (Eigen::Index ip = 0; ip < grid.p_axis.size(); ++ip)
    for (Eigen::Index ix = 0; ix < grid.x_axis.size(); ++ix)
      out += fmt17(grid.x_axis(ix)) + "," + fmt17(grid.p_axis(ip)) + "," +
             fmt17(grid.values(ip, ix)) + "\n";
  return out;
}

inline std::string wigner_sidecar(const WignerGrid& grid) {
  auto axis = [](const Eigen::VectorXd& v) {
    std::string s = "[";
    for (Eigen::Index k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt17(v(k));
    return s + "]";
  };
  return "{\"extent\":" + fmt17(grid.extent) + ",\"n_points\":" + std::to_string(grid.x_axis.size()) +
         ",\"cell_area\":" + fmt17(grid.cell_area()) + ",\"integral\":" + fmt17(grid.integral()) +
         ",\"min\":" + fmt17(grid.min()) + ",\"max\":" + fmt17(grid.max()) +
         ",\"negativity_volume\":" + fmt17(negativity_volume(grid)) +
         ",\"x_axis\":" + axis(grid.x_axis) + ",\"p_axis\":" + axis(grid.p_axis) + "}\n";
}

}  // namespace catfb::io
