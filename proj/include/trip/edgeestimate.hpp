#pragma once

#include "trip/scalesync.hpp"

namespace trip {

struct SelectionParams {
  double gamma = 1.0;
  int m_min = 2;
  // Shrinkage constant in the ranking score (sum |r_sync| + kappa)/(|N_t|+1);
  // matches the robust scale of the loss. Raw bar_r is kept for reporting.
  double score_kappa = 0.1;
};

struct SelectionState {
  std::vector<int> order;       // record ordinals, ranking order
  int prefix = 0;               // selected count k (first prefix entries)
  std::vector<char> selected;   // per record
  std::vector<char> active;     // per edge: support >= m_min within the prefix
  std::vector<int> component;   // sorted node ids of C(S_k)
  std::vector<char> in_component;  // per node
  double coverage = 0.0;        // |C(S_k)| / n
  bool shortfall = false;       // gamma unreachable; ran to the full list
};

// Length proposals and robust aggregate for one active edge inside C(S_k).
struct EdgeLengthEstimate {
  int e = 0;
  std::vector<double> proposals;  // sorted ascending
  double ell = 0.0;               // lower median of proposals
  double delta = 0.0;             // lower median of |p/ell - 1|
  double w = 0.0;                 // 1/(1+(delta/c)^2) * |P|/(|P|+1), c = 0.1
};

// Grows the ranked prefix until the largest connected component of the
// active-edge graph covers gamma * n nodes; returns the smallest such prefix.
// Throws std::invalid_argument unless 0 < gamma <= 1 and m_min >= 1.
SelectionState select_triangle_prefix(const TrianglePool& pool, const ScaleSolution& sync,
                                      const ViewingGraph& g, const SelectionParams& params);

std::vector<EdgeLengthEstimate> aggregate_edge_lengths(const SelectionState& state,
                                                       const ScaleSolution& sync,
                                                       const TrianglePool& pool,
                                                       const ViewingGraph& g);

}  // namespace trip
