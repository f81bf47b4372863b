#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctqw/errors.hpp"

namespace ctqw::graph {

// Finite undirected simple graph. Edges are normalized to u < v, sorted,
// deduplicated; vertex indices are 0-based.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

// Validates and normalizes an edge set into a Graph.
inline Graph make_graph(int n, std::vector<std::pair<int, int>> edges) {
  if (n < 1) throw contract_error("vertex count must be >= 1");
  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw contract_error("edge endpoint out of range");
    if (u == v) throw contract_error("self-loops are not allowed");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return Graph{n, std::move(edges)};
}

// Text format: first non-comment line holds the vertex count, each following
// non-comment line holds "u v". '#' starts a comment (whole-line or trailing).
// Reversed and repeated edges are deduplicated. Throws parse_error with the
// 1-based line number on malformed input.
inline Graph parse_edge_list(std::istream& in) {
  long lineno = 0;
  bool have_n = false;
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    if (!have_n) {
      long value = 0;
      std::string extra;
      if (!(fields >> value)) {
        if (fields.eof()) continue;  // blank or comment-only line
        throw parse_error("expected vertex count", lineno);
      }
      if (fields >> extra) throw parse_error("trailing text after vertex count", lineno);
      if (value < 1) throw parse_error("vertex count must be >= 1", lineno);
      n = static_cast<int>(value);
      have_n = true;
      continue;
    }
    long u = 0, v = 0;
    std::string extra;
    if (!(fields >> u)) {
      if (fields.eof()) continue;
      throw parse_error("expected edge \"u v\"", lineno);
    }
    if (!(fields >> v)) throw parse_error("expected edge \"u v\"", lineno);
    if (fields >> extra) throw parse_error("trailing text after edge", lineno);
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw parse_error("vertex index out of range", lineno);
    if (u == v) throw parse_error("self-loop", lineno);
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  if (!have_n) throw parse_error("missing vertex count", lineno == 0 ? 1 : lineno);
  return make_graph(n, std::move(edges));
}

// H = D - A: degree matrix minus adjacency. Real symmetric, zero row sums,
// degrees on the diagonal; the uniform vector is always in its kernel.
inline Eigen::MatrixXd hamiltonian(const Graph& g) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(g.n, g.n);
  for (auto [u, v] : g.edges) {
    h(u, v) -= 1.0;
    h(v, u) -= 1.0;
    h(u, u) += 1.0;
    h(v, v) += 1.0;
  }
  return h;
}

// Edge {u,v} present iff absent in g. Involutive.
inline Graph complement(const Graph& g) {
  std::vector<std::vector<char>> adj(g.n, std::vector<char>(g.n, 0));
  for (auto [u, v] : g.edges) adj[u][v] = adj[v][u] = 1;
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < g.n; ++u)
    for (int v = u + 1; v < g.n; ++v)
      if (!adj[u][v]) edges.emplace_back(u, v);
  return Graph{g.n, std::move(edges)};
}

// Maximal connected vertex sets, each sorted, ordered by smallest member.
inline std::vector<std::vector<int>> connected_components(const Graph& g) {
  std::vector<std::vector<int>> nbr(g.n);
  for (auto [u, v] : g.edges) {
    nbr[u].push_back(v);
    nbr[v].push_back(u);
  }
  std::vector<char> seen(g.n, 0);
  std::vector<std::vector<int>> comps;
  for (int start = 0; start < g.n; ++start) {
    if (seen[start]) continue;
    std::vector<int> comp, stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      comp.push_back(u);
      for (int v : nbr[u])
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

inline bool is_connected(const Graph& g) {
  return connected_components(g).size() == 1;
}

// Infinite-hitting witness from complement disconnection: if complement(g) is
// disconnected and some component C not containing v_f has |C| >= 2, the state
// (|a> - |b>)/sqrt(2) for a,b in C never develops amplitude on v_f. Returns
// that state built from the two largest-indexed vertices of the first such C
// (components ordered by smallest member). Requires g connected.
inline std::optional<Eigen::VectorXcd> complement_witness(const Graph& g, int v_f) {
  if (v_f < 0 || v_f >= g.n) throw contract_error("final vertex out of range");
  if (!is_connected(g))
    throw contract_error("complement witness requires a connected graph");
  auto comps = connected_components(complement(g));
  if (comps.size() < 2) return std::nullopt;
  for (const auto& comp : comps) {
    if (std::binary_search(comp.begin(), comp.end(), v_f)) continue;
    if (comp.size() < 2) continue;
    int a = comp[comp.size() - 2], b = comp[comp.size() - 1];
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(g.n);
    psi(a) = 1.0 / std::sqrt(2.0);
    psi(b) = -1.0 / std::sqrt(2.0);
    return psi;
  }
  return std::nullopt;
}

}  // namespace ctqw::graph
