#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "trip/viewgraph.hpp"

namespace trip {

// Plain-text formats, whitespace separated, '#' starts a comment line.
// Floats are written with 17 significant digits so a write/read round-trip is
// exact. Parse errors name the offending line.
//
//   measurements: i j dx dy dz
//   locations / ground truth: i x y z
//   labels: i j {0|1}
//   node set: i

void write_measurements(const std::string& path,
                        const std::vector<std::tuple<int, int, Vec3>>& measurements);
std::vector<std::tuple<int, int, Vec3>> read_measurements(const std::string& path);

void write_locations(const std::string& path, const std::vector<int>& nodes,
                     const std::vector<Vec3>& x);
std::vector<std::pair<int, Vec3>> read_locations(const std::string& path);

void write_labels(const std::string& path, const std::vector<std::pair<int, int>>& edges,
                  const std::vector<char>& corrupt);
std::vector<std::tuple<int, int, int>> read_labels(const std::string& path);

void write_node_set(const std::string& path, const std::vector<int>& nodes);
std::vector<int> read_node_set(const std::string& path);

std::string format_double(double v);  // %.17g

}  // namespace trip
