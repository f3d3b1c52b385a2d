#pragma once

#include "topic/neural_gas.hpp"

#include <filesystem>
#include <iosfwd>

namespace topic {

// Plain-text graph checkpoint. Layout:
//
//   ngtxt 1
//   lifetime <T>
//   nodes <N>
//   node <index> label <c> session <s>
//   m <count> <values...>
//   var <count> <values...>
//   z <count> <values...>
//   ...                      (one node block per node)
//   edges <E>
//   <i> <j> <age>            (i < j, one line per live edge)
//
// Reals are written with 17 significant digits so a load restores the graph
// exactly.
inline constexpr int kGraphFormatVersion = 1;

void save_graph(const NGGraph& graph, std::ostream& out);
NGGraph load_graph(std::istream& in);

void save_graph(const NGGraph& graph, const std::filesystem::path& path);
NGGraph load_graph(const std::filesystem::path& path);

}  // namespace topic
