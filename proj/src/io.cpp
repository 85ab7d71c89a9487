#include "trip/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace trip {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

[[noreturn]] void parse_fail(const std::string& path, int line) {
  throw std::runtime_error("parse error in " + path + " at line " + std::to_string(line));
}

// Strips comments; returns false for blank lines.
bool payload(const std::string& line, std::string& out) {
  const auto hash = line.find('#');
  out = (hash == std::string::npos) ? line : line.substr(0, hash);
  return out.find_first_not_of(" \t\r\n") != std::string::npos;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_measurements(const std::string& path,
                        const std::vector<std::tuple<int, int, Vec3>>& measurements) {
  auto out = open_out(path);
  out << "# i j dx dy dz\n";
  for (const auto& [i, j, d] : measurements)
    out << i << ' ' << j << ' ' << format_double(d[0]) << ' ' << format_double(d[1]) << ' '
        << format_double(d[2]) << '\n';
}

std::vector<std::tuple<int, int, Vec3>> read_measurements(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::tuple<int, int, Vec3>> out;
  std::string line, body;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!payload(line, body)) continue;
    std::istringstream ss(body);
    int i, j;
    double dx, dy, dz;
    if (!(ss >> i >> j >> dx >> dy >> dz)) parse_fail(path, lineno);
    std::string extra;
    if (ss >> extra) parse_fail(path, lineno);
    out.emplace_back(i, j, Vec3(dx, dy, dz));
  }
  return out;
}

void write_locations(const std::string& path, const std::vector<int>& nodes,
                     const std::vector<Vec3>& x) {
  auto out = open_out(path);
  out << "# i x y z\n";
  for (std::size_t v = 0; v < nodes.size(); ++v)
    out << nodes[v] << ' ' << format_double(x[v][0]) << ' ' << format_double(x[v][1]) << ' '
        << format_double(x[v][2]) << '\n';
}

std::vector<std::pair<int, Vec3>> read_locations(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::pair<int, Vec3>> out;
  std::string line, body;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!payload(line, body)) continue;
    std::istringstream ss(body);
    int i;
    double x, y, z;
    if (!(ss >> i >> x >> y >> z)) parse_fail(path, lineno);
    std::string extra;
    if (ss >> extra) parse_fail(path, lineno);
    out.emplace_back(i, Vec3(x, y, z));
  }
  return out;
}

void write_labels(const std::string& path, const std::vector<std::pair<int, int>>& edges,
                  const std::vector<char>& corrupt) {
  auto out = open_out(path);
  out << "# i j corrupt\n";
  for (std::size_t e = 0; e < edges.size(); ++e)
    out << edges[e].first << ' ' << edges[e].second << ' ' << (corrupt[e] ? 1 : 0) << '\n';
}

std::vector<std::tuple<int, int, int>> read_labels(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::tuple<int, int, int>> out;
  std::string line, body;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!payload(line, body)) continue;
    std::istringstream ss(body);
    int i, j, label;
    if (!(ss >> i >> j >> label) || (label != 0 && label != 1)) parse_fail(path, lineno);
    out.emplace_back(i, j, label);
  }
  return out;
}

void write_node_set(const std::string& path, const std::vector<int>& nodes) {
  auto out = open_out(path);
  out << "# i\n";
  for (int v : nodes) out << v << '\n';
}

std::vector<int> read_node_set(const std::string& path) {
  auto in = open_in(path);
  std::vector<int> out;
  std::string line, body;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!payload(line, body)) continue;
    std::istringstream ss(body);
    int i;
    if (!(ss >> i)) parse_fail(path, lineno);
    out.push_back(i);
  }
  return out;
}

}  // namespace trip
