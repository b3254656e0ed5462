#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nltsa/parallel.hpp"
#include "nltsa/types.hpp"

namespace nltsa {

enum class OrdinalRanking { amplitude, chronological };

/// Rank-order symbol stream: one permutation id per length-m window of
/// samples spaced tau apart.  Ids live in [0, m!).
struct OrdinalSeries {
  Eigen::VectorXi symbols;
  Index m = 0;
  Index tau = 0;
  OrdinalRanking ranking = OrdinalRanking::chronological;

  Index size() const { return symbols.size(); }
};

/// Number of distinct symbols an order-m construction can emit (m!).
inline Index ordinal_cardinality(Index m) {
  static constexpr std::array<Index, 9> table = {1, 1, 2, 6, 24, 120, 720, 5040, 40320};
  if (m < 0 || m > 8) throw std::invalid_argument("ordinal_cardinality: order must lie in [0, 8]");
  return table[static_cast<std::size_t>(m)];
}

namespace detail {

// Lehmer code: id = sum over positions of (count of later entries smaller
// than this one) * (remaining length)!.  Bijective on permutations of
// {0..m-1}, so both ranking modes share one id space.
inline int lehmer_id(const Index* perm, Index m) {
  int id = 0;
  for (Index k = 0; k + 1 < m; ++k) {
    int smaller = 0;
    for (Index j = k + 1; j < m; ++j)
      if (perm[j] < perm[k]) ++smaller;
    id += smaller * static_cast<int>(ordinal_cardinality(m - 1 - k));
  }
  return id;
}

}  // namespace detail

/// Symbolize length-m windows (x(t), x(t+tau), ..., x(t+(m-1)tau)).
///
/// Chronological mode emits the window positions sorted by descending value;
/// amplitude mode emits each position's descending rank (the two are inverse
/// permutations).  Equal values rank the earlier sample higher, which keeps
/// the partition proper: every window lands in exactly one wedge.
inline OrdinalSeries ordinal_symbols(const TimeSeries& series, Index m, Index tau,
                                     OrdinalRanking ranking = OrdinalRanking::chronological) {
  if (m < 2 || m > 8) throw std::invalid_argument("ordinal_symbols: order must lie in [2, 8]");
  if (tau < 1) throw std::invalid_argument("ordinal_symbols: tau must be >= 1");
  const Index n = series.size();
  const Index span = (m - 1) * tau;
  if (span >= n) throw std::invalid_argument("ordinal_symbols: series shorter than one window");

  OrdinalSeries out;
  out.m = m;
  out.tau = tau;
  out.ranking = ranking;
  out.symbols.resize(n - span);
  parallel_chunks(out.size(), [&](int, Index begin, Index end) {
    std::array<Index, 8> order;
    std::array<Index, 8> rank;
    for (Index t = begin; t < end; ++t) {
      for (Index k = 0; k < m; ++k) order[static_cast<std::size_t>(k)] = k;
      std::stable_sort(order.begin(), order.begin() + m, [&](Index a, Index b) {
        return series.values[t + a * tau] > series.values[t + b * tau];
      });
      const Index* perm = order.data();
      if (ranking == OrdinalRanking::amplitude) {
        for (Index r = 0; r < m; ++r) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
        perm = rank.data();
      }
      out.symbols[t] = detail::lehmer_id(perm, m);
    }
  });
  return out;
}

namespace detail {

inline std::vector<Index> symbol_counts(const OrdinalSeries& ordinal) {
  std::vector<Index> counts(static_cast<std::size_t>(ordinal_cardinality(ordinal.m)), 0);
  for (Index t = 0; t < ordinal.size(); ++t) ++counts[static_cast<std::size_t>(ordinal.symbols[t])];
  return counts;
}

}  // namespace detail

/// Shannon entropy (bits) of the observed symbol distribution; the
/// normalized variant divides by log2(m!) so 1 means all symbols
/// equiprobable and 0 means a single symbol.
inline double permutation_entropy(const TimeSeries& series, Index m, Index tau,
                                  bool normalize = false) {
  const OrdinalSeries ordinal = ordinal_symbols(series, m, tau);
  const std::vector<Index> counts = detail::symbol_counts(ordinal);
  const double total = static_cast<double>(ordinal.size());
  double h = 0.0;
  for (Index c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  if (normalize) h /= std::log2(static_cast<double>(ordinal_cardinality(m)));
  return h;
}

/// Entropy of the one-step symbol transitions: -sum_i p_i sum_j p_ij log2
/// p_ij, with p_i the share of outgoing windows and p_ij the row-conditional
/// transition frequencies.  Zero for deterministic successions.
inline double conditional_permutation_entropy(const TimeSeries& series, Index m, Index tau) {
  const OrdinalSeries ordinal = ordinal_symbols(series, m, tau);
  if (ordinal.size() < 2)
    throw std::invalid_argument("conditional_permutation_entropy: need at least two windows");
  std::map<std::pair<int, int>, Index> edges;
  std::vector<Index> outgoing(static_cast<std::size_t>(ordinal_cardinality(m)), 0);
  for (Index t = 0; t + 1 < ordinal.size(); ++t) {
    ++edges[{ordinal.symbols[t], ordinal.symbols[t + 1]}];
    ++outgoing[static_cast<std::size_t>(ordinal.symbols[t])];
  }
  const double total = static_cast<double>(ordinal.size() - 1);
  double h = 0.0;
  for (const auto& [edge, count] : edges) {
    const double leaves = static_cast<double>(outgoing[static_cast<std::size_t>(edge.first)]);
    const double p_i = leaves / total;
    const double p_ij = static_cast<double>(count) / leaves;
    h -= p_i * p_ij * std::log2(p_ij);
  }
  return h;
}

/// Directed, weighted graph over the observed symbols.  `weights` is
/// row-stochastic: row i holds the frequencies of each successor of node i.
/// A symbol seen only in the final window has no observed successor; its row
/// gets a synthetic unit self-loop (not counted as an observed transition).
struct TransitionNetwork {
  std::vector<int> nodes;
  Eigen::MatrixXd weights;
  Index forbidden_symbols = 0;
  Index forbidden_transitions = 0;
};

inline TransitionNetwork transition_network(const OrdinalSeries& ordinal) {
  if (ordinal.size() < 2)
    throw std::invalid_argument("transition_network: need at least two symbols");
  TransitionNetwork net;
  net.nodes.assign(ordinal.symbols.begin(), ordinal.symbols.end());
  std::sort(net.nodes.begin(), net.nodes.end());
  net.nodes.erase(std::unique(net.nodes.begin(), net.nodes.end()), net.nodes.end());
  const Index k = static_cast<Index>(net.nodes.size());

  std::vector<Index> slot(static_cast<std::size_t>(ordinal_cardinality(ordinal.m)), -1);
  for (Index i = 0; i < k; ++i) slot[static_cast<std::size_t>(net.nodes[static_cast<std::size_t>(i)])] = i;

  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k);
  for (Index t = 0; t + 1 < ordinal.size(); ++t)
    counts(slot[static_cast<std::size_t>(ordinal.symbols[t])],
           slot[static_cast<std::size_t>(ordinal.symbols[t + 1])]) += 1.0;

  net.forbidden_symbols = ordinal_cardinality(ordinal.m) - k;
  net.forbidden_transitions = k * k - (counts.array() > 0.0).count();

  net.weights = counts;
  for (Index i = 0; i < k; ++i) {
    const double leaves = counts.row(i).sum();
    if (leaves > 0.0)
      net.weights.row(i) /= leaves;
    else
      net.weights(i, i) = 1.0;
  }
  return net;
}

/// One candidate section per observed symbol: the sub-series of anchors
/// whose window carries that symbol, scored by the weighted entropy of its
/// own inner symbol distribution.
struct OrdinalSection {
  int symbol = 0;
  double frequency = 0.0;            // share of windows carrying the symbol
  double entrance_frequency = 0.0;   // share of runs (consecutive repeats count once)
  std::optional<double> h_w;         // empty when the section has no inner window
  std::optional<double> h_ew;
  std::vector<Index> entrance_times;
  Eigen::MatrixX2d first_return;     // (x(t_k), x(t_{k+1})) over entrance times
};

/// Split the series by window symbol and score each component as a section.
/// Components are scored by h_W = -sum_j K p_j log2(K p_j) where K is the
/// symbol's share and p_j the component's inner symbol frequencies (order m,
/// inner lag 1 over the component's own index); h_EW swaps K for the
/// first-entrance share.  Section values and times are read at the window's
/// latest sample (anchor + (m-1)tau), the moment the window completes.
/// Sections come back sorted by h_W descending; unscorable (too short)
/// components trail in symbol order.
inline std::vector<OrdinalSection> ordinal_poincare(const TimeSeries& series, Index m, Index tau) {
  const OrdinalSeries ordinal = ordinal_symbols(series, m, tau);
  const Index shift = (m - 1) * tau;
  std::map<int, std::vector<Index>> anchors;
  std::map<int, std::vector<Index>> entrances;
  Index total_entrances = 0;
  for (Index t = 0; t < ordinal.size(); ++t) {
    const int sym = ordinal.symbols[t];
    anchors[sym].push_back(t);
    if (t == 0 || ordinal.symbols[t - 1] != sym) {
      entrances[sym].push_back(t);
      ++total_entrances;
    }
  }

  std::vector<OrdinalSection> sections;
  sections.reserve(anchors.size());
  for (const auto& [sym, at] : anchors) {
    OrdinalSection sec;
    sec.symbol = sym;
    sec.frequency = static_cast<double>(at.size()) / static_cast<double>(ordinal.size());
    const std::vector<Index>& entr = entrances[sym];
    sec.entrance_frequency =
        static_cast<double>(entr.size()) / static_cast<double>(total_entrances);
    sec.entrance_times.reserve(entr.size());
    for (Index t : entr) sec.entrance_times.push_back(t + shift);

    sec.first_return.resize(std::max<Index>(static_cast<Index>(entr.size()) - 1, 0), 2);
    for (Index r = 0; r + 1 < static_cast<Index>(entr.size()); ++r) {
      sec.first_return(r, 0) = series.values[entr[static_cast<std::size_t>(r)] + shift];
      sec.first_return(r, 1) = series.values[entr[static_cast<std::size_t>(r) + 1] + shift];
    }

    if (static_cast<Index>(at.size()) >= m) {
      TimeSeries component;
      component.values.resize(static_cast<Index>(at.size()));
      for (std::size_t i = 0; i < at.size(); ++i)
        component.values[static_cast<Index>(i)] = series.values[at[i] + shift];
      const OrdinalSeries inner = ordinal_symbols(component, m, 1);
      const std::vector<Index> counts = detail::symbol_counts(inner);
      const double total = static_cast<double>(inner.size());
      double h_w = 0.0;
      double h_ew = 0.0;
      for (Index c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        const double w = sec.frequency * p;
        const double ew = sec.entrance_frequency * p;
        h_w -= w * std::log2(w);
        h_ew -= ew * std::log2(ew);
      }
      sec.h_w = h_w;
      sec.h_ew = h_ew;
    }
    sections.push_back(std::move(sec));
  }

  std::sort(sections.begin(), sections.end(), [](const OrdinalSection& a, const OrdinalSection& b) {
    if (a.h_w.has_value() != b.h_w.has_value()) return a.h_w.has_value();
    if (a.h_w && b.h_w && *a.h_w != *b.h_w) return *a.h_w > *b.h_w;
    return a.symbol < b.symbol;
  });
  return sections;
}

/// Strict local maxima and their first-return pairs.
struct ReturnMap {
  std::vector<Index> times;
  Eigen::VectorXd values;
  Eigen::MatrixX2d pairs;  // row k = (M_k, M_{k+1})
};

/// Extract strict three-point local maxima (x[i-1] < x[i] > x[i+1]) and pair
/// each with its successor.
inline ReturnMap maxima_return_map(const TimeSeries& series) {
  if (series.size() < 3)
    throw std::invalid_argument("maxima_return_map: need at least 3 samples");
  ReturnMap map;
  for (Index i = 1; i + 1 < series.size(); ++i)
    if (series.values[i - 1] < series.values[i] && series.values[i] > series.values[i + 1])
      map.times.push_back(i);
  const Index k = static_cast<Index>(map.times.size());
  if (k < 2) throw std::runtime_error("maxima_return_map: fewer than 2 maxima");
  map.values.resize(k);
  for (Index i = 0; i < k; ++i) map.values[i] = series.values[map.times[static_cast<std::size_t>(i)]];
  map.pairs.resize(k - 1, 2);
  for (Index i = 0; i + 1 < k; ++i) {
    map.pairs(i, 0) = map.values[i];
    map.pairs(i, 1) = map.values[i + 1];
  }
  return map;
}

}  // namespace nltsa
