#include "adaptscale/hamio.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "adaptscale/errors.hpp"

namespace adaptscale::hamio {

void TwoBodyTensor::set_symmetric(std::size_t i, std::size_t j, std::size_t k, std::size_t l,
                                  double v) {
  for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
    for (auto [c, d] : {std::pair{k, l}, std::pair{l, k}}) {
      data_[index(a, b, c, d)] = v;
      data_[index(c, d, a, b)] = v;
    }
  }
}

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

bool parse_long(const std::string& token, long& out) {
  if (token.empty()) return false;
  char* end = nullptr;
  out = std::strtol(token.c_str(), &end, 10);
  return end == token.c_str() + token.size();
}

bool parse_double(std::string token, double& out) {
  // Fortran writers sometimes emit D exponents.
  std::replace(token.begin(), token.end(), 'D', 'E');
  std::replace(token.begin(), token.end(), 'd', 'e');
  if (token.empty()) return false;
  char* end = nullptr;
  out = std::strtod(token.c_str(), &end);
  return end == token.c_str() + token.size();
}

struct Header {
  std::map<std::string, std::vector<std::string>> fields;
  std::size_t end_line = 0;
};

// Reads the namelist block; leaves the stream positioned after it.
Header read_header(std::istream& in, std::size_t& line_no) {
  Header header;
  std::string body;
  std::string line;
  bool started = false;
  bool finished = false;
  while (!finished && std::getline(in, line)) {
    ++line_no;
    std::string u = upper(line);
    if (!started) {
      auto pos = u.find("&FCI");
      if (pos == std::string::npos) {
        if (u.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw ParseError("expected '&FCI' namelist header", line_no);
      }
      started = true;
      u = u.substr(pos + 4);
    }
    auto end_pos = u.find("&END");
    if (end_pos != std::string::npos) {
      u = u.substr(0, end_pos);
      finished = true;
    } else {
      auto slash = u.find('/');
      if (slash != std::string::npos) {
        u = u.substr(0, slash);
        finished = true;
      }
    }
    body += u;
    body += ' ';
  }
  if (!started) throw ParseError("empty input, no '&FCI' header", line_no);
  if (!finished) throw ParseError("unterminated namelist header", line_no);
  header.end_line = line_no;

  // Split "KEY=v1,v2, KEY2=..." into fields.
  std::string key;
  std::string token;
  auto flush_token = [&]() {
    if (!token.empty()) {
      if (key.empty()) throw ParseError("value '" + token + "' without a key", line_no);
      header.fields[key].push_back(token);
      token.clear();
    }
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c == '=') {
      if (token.empty()) throw ParseError("'=' without a key", line_no);
      key = token;
      token.clear();
      header.fields.try_emplace(key);
    } else if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      flush_token();
    } else {
      token.push_back(c);
    }
  }
  flush_token();
  return header;
}

long required_int(const Header& h, const std::string& key, long fallback, bool optional) {
  auto it = h.fields.find(key);
  if (it == h.fields.end() || it->second.empty()) {
    if (optional) return fallback;
    throw ParseError("missing " + key + " in namelist header", h.end_line);
  }
  long v = 0;
  if (it->second.size() != 1 || !parse_long(it->second.front(), v))
    throw ParseError("malformed " + key + " value", h.end_line);
  return v;
}

}  // namespace

MolecularProblem parse_fcidump(std::istream& in) {
  std::size_t line_no = 0;
  Header header = read_header(in, line_no);
  const long norb = required_int(header, "NORB", 0, false);
  const long nelec = required_int(header, "NELEC", 0, false);
  const long ms2 = required_int(header, "MS2", 0, true);
  if (norb < 0) throw ParseError("NORB must be non-negative", header.end_line);
  if (nelec < 0) throw ParseError("NELEC must be non-negative", header.end_line);
  if ((nelec + ms2) % 2 != 0)
    throw InconsistentSector("NELEC + MS2 is odd (NELEC=" + std::to_string(nelec) +
                             ", MS2=" + std::to_string(ms2) + ")");
  const long na = (nelec + ms2) / 2;
  const long nb = (nelec - ms2) / 2;
  if (na < 0 || nb < 0 || na > norb || nb > norb)
    throw InconsistentSector("electron counts (" + std::to_string(na) + "," + std::to_string(nb) +
                             ") do not fit in " + std::to_string(norb) + " orbitals");

  MolecularProblem p;
  const auto n = static_cast<std::size_t>(norb);
  p.n_orbitals = n;
  p.n_alpha = static_cast<std::size_t>(na);
  p.n_beta = static_cast<std::size_t>(nb);
  p.spin_multiplicity_target = static_cast<int>(std::labs(ms2)) + 1;
  p.one_body.assign(n * n, 0.0);
  p.two_body = TwoBodyTensor(n);

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 5) throw ParseError("expected 'value i j k l'", line_no);
    double v = 0.0;
    if (!parse_double(tok[0], v)) throw ParseError("malformed integral value", line_no);
    long idx[4];
    for (int a = 0; a < 4; ++a) {
      if (!parse_long(tok[a + 1], idx[a])) throw ParseError("malformed index", line_no);
      if (idx[a] < 0 || idx[a] > norb)
        throw IndexError("line " + std::to_string(line_no) + ": index " + std::to_string(idx[a]) +
                         " outside [0, " + std::to_string(norb) + "]");
    }
    const auto [i, j, k, l] = std::array{idx[0], idx[1], idx[2], idx[3]};
    if (i && j && k && l) {
      p.two_body.set_symmetric(i - 1, j - 1, k - 1, l - 1, v);
    } else if (i && j && !k && !l) {
      p.one_body[(i - 1) * n + (j - 1)] = v;
      p.one_body[(j - 1) * n + (i - 1)] = v;
    } else if (!i && !j && !k && !l) {
      p.core_energy = v;
    } else if (i && !j && !k && !l) {
      // orbital energy record; not part of the Hamiltonian
    } else {
      throw IndexError("line " + std::to_string(line_no) + ": unsupported index pattern");
    }
  }
  return p;
}

MolecularProblem parse_fcidump(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_fcidump(in);
}

MolecularProblem read_fcidump_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open FCIDUMP file '" + path + "'");
  auto p = parse_fcidump(in);
  auto slash = path.find_last_of('/');
  p.label = path.substr(slash == std::string::npos ? 0 : slash + 1);
  return p;
}

std::string write_fcidump(const MolecularProblem& p) {
  const std::size_t n = p.n_orbitals;
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, " &FCI NORB=%zu,NELEC=%zu,MS2=%ld,\n  ORBSYM=", n,
                p.n_electrons(),
                static_cast<long>(p.n_alpha) - static_cast<long>(p.n_beta));
  out += buf;
  for (std::size_t i = 0; i < n; ++i) out += "1,";
  out += "\n  ISYM=1,\n &END\n";
  auto emit = [&](double v, std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    std::snprintf(buf, sizeof buf, "%.17g %zu %zu %zu %zu\n", v, i, j, k, l);
    out += buf;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      for (std::size_t k = 0; k <= i; ++k)
        for (std::size_t l = 0; l <= (k == i ? j : k); ++l) {
          double v = p.two_body.chem(i, j, k, l);
          if (v != 0.0) emit(v, i + 1, j + 1, k + 1, l + 1);
        }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = p.h(i, j);
      if (v != 0.0) emit(v, i + 1, j + 1, 0, 0);
    }
  emit(p.core_energy, 0, 0, 0, 0);
  return out;
}

double symmetry_violation(const MolecularProblem& p) {
  const std::size_t n = p.n_orbitals;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(p.h(i, j) - p.h(j, i)));
  const auto& t = p.two_body;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          const double v = t.chem(i, j, k, l);
          for (double w : {t.chem(j, i, k, l), t.chem(i, j, l, k), t.chem(j, i, l, k),
                           t.chem(k, l, i, j), t.chem(l, k, i, j), t.chem(k, l, j, i),
                           t.chem(l, k, j, i)})
            worst = std::max(worst, std::abs(v - w));
        }
  return worst;
}

}  // namespace adaptscale::hamio
