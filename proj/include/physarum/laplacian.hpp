#pragma once

// Grounded network Poisson system: assembly of the weighted Laplacian from
// per-arc conductances g = D/L, its solution with one node pinned to zero
// pressure, and the Poiseuille flow law Q = g (p_tail - p_head).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/LU>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "physarum/error.hpp"
#include "physarum/graph.hpp"

namespace physarum {

/// Arcs whose conductivity falls below this value do not count as links
/// when deciding which nodes the grounded solve can reach.
inline constexpr double kDeadConductivity = 1e-12;

struct PoissonSystem {
  std::size_t dimension = 0;
  std::vector<NodeId> tails;
  std::vector<NodeId> heads;
  std::vector<double> weights;  // conductance D/L per arc
  std::vector<bool> live;       // D >= kDeadConductivity
  std::vector<double> injections;
  NodeId grounded_node = 0;
};

struct PressureVector {
  std::vector<double> pressure;
  double residual_norm = 0.0;
  std::size_t floating_nodes = 0;  // nodes reached only through dead arcs

  double operator[](std::size_t i) const { return pressure[i]; }
  std::size_t size() const noexcept { return pressure.size(); }
};

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline void require_balanced(std::span<const double> injections) {
  double sum = 0.0;
  double mag = 0.0;
  for (double b : injections) {
    sum += b;
    mag += std::abs(b);
  }
  if (std::abs(sum) > 1e-9 * mag)
    throw Error(ErrorCode::unbalanced_injections, "injections sum to " + std::to_string(sum));
}

inline PoissonSystem assemble(const Graph& graph, std::span<const double> conductivity, std::span<const double> lengths,
                              std::span<const double> injections, NodeId grounded) {
  require_arc_vector(graph, conductivity, "conductivity");
  require_arc_vector(graph, lengths, "lengths");
  require_node_vector(graph, injections, "injections");
  if (grounded < 0 || static_cast<std::size_t>(grounded) >= graph.node_count())
    throw Error(ErrorCode::out_of_range_node, "grounded node " + std::to_string(grounded));
  require_balanced(injections);

  PoissonSystem sys;
  sys.dimension = graph.node_count();
  sys.grounded_node = grounded;
  sys.injections.assign(injections.begin(), injections.end());
  const std::size_t m = graph.arc_count();
  sys.tails.resize(m);
  sys.heads.resize(m);
  sys.weights.resize(m);
  sys.live.resize(m);
  for (const Arc& a : graph.arcs()) {
    const auto i = static_cast<std::size_t>(a.id);
    const double d = conductivity[i];
    if (!(d >= 0.0)) throw Error(ErrorCode::negative_conductivity, "arc " + std::to_string(a.id));
    if (!(lengths[i] > 0.0)) throw Error(ErrorCode::non_positive_length, "arc " + std::to_string(a.id));
    sys.tails[i] = a.tail;
    sys.heads[i] = a.head;
    sys.weights[i] = d / lengths[i];
    sys.live[i] = d >= kDeadConductivity && sys.weights[i] > 0.0;
  }
  return sys;
}

inline PoissonSystem assemble(const Graph& graph, std::span<const double> conductivity,
                              std::span<const double> injections, NodeId grounded) {
  const auto lengths = graph.lengths();
  return assemble(graph, conductivity, lengths, injections, grounded);
}

/// Full weighted Laplacian (row sums zero), before grounding.
inline Eigen::MatrixXd laplacian_matrix(const PoissonSystem& sys) {
  const auto n = static_cast<Eigen::Index>(sys.dimension);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t a = 0; a < sys.weights.size(); ++a) {
    const Eigen::Index t = sys.tails[a];
    const Eigen::Index h = sys.heads[a];
    const double w = sys.weights[a];
    lap(t, t) += w;
    lap(h, h) += w;
    lap(t, h) -= w;
    lap(h, t) -= w;
  }
  return lap;
}

/// Laplacian with the grounded row and column removed.
inline Eigen::MatrixXd grounded_matrix(const PoissonSystem& sys) {
  const Eigen::MatrixXd lap = laplacian_matrix(sys);
  const auto n = static_cast<Eigen::Index>(sys.dimension);
  const Eigen::Index g = sys.grounded_node;
  Eigen::MatrixXd out(n - 1, n - 1);
  for (Eigen::Index i = 0, r = 0; i < n; ++i) {
    if (i == g) continue;
    for (Eigen::Index j = 0, c = 0; j < n; ++j) {
      if (j == g) continue;
      out(r, c++) = lap(i, j);
    }
    ++r;
  }
  return out;
}

/// b - L p evaluated arc by arc (differences first, so large common
/// pressures do not cancel); the grounded row is reported as zero.
inline std::vector<double> poisson_residual(const PoissonSystem& sys, std::span<const double> p) {
  std::vector<double> r(sys.injections);
  for (std::size_t a = 0; a < sys.weights.size(); ++a) {
    const double w = sys.weights[a];
    if (w == 0.0) continue;
    const auto t = static_cast<std::size_t>(sys.tails[a]);
    const auto h = static_cast<std::size_t>(sys.heads[a]);
    const double q = w * (p[t] - p[h]);
    r[t] -= q;
    r[h] += q;
  }
  r[static_cast<std::size_t>(sys.grounded_node)] = 0.0;
  return r;
}

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Symmetric positive definite solve with Jacobi scaling. Dense Cholesky for
// small or dense systems, falling back to fully pivoted LU when conductances
// spanning many orders of magnitude make the scaled matrix look indefinite;
// sparse LDL^T otherwise.
class SpdSolver {
 public:
  SpdSolver(std::size_t n, const std::vector<Eigen::Triplet<double>>& entries) : n_(static_cast<Eigen::Index>(n)) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n_);
    for (const auto& e : entries)
      if (e.row() == e.col()) diag(e.row()) += e.value();
    scale_ = diag.cwiseSqrt().cwiseInverse();
    if (!scale_.allFinite()) throw Error(ErrorCode::singular_system, "zero diagonal in grounded Laplacian");

    dense_ = n_ <= 1200 || static_cast<double>(entries.size()) > 0.05 * static_cast<double>(n_) * static_cast<double>(n_);
    if (dense_) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
      for (const auto& e : entries) a(e.row(), e.col()) += e.value() * scale_(e.row()) * scale_(e.col());
      llt_.compute(a);
      if (llt_.info() != Eigen::Success) {
        pivoted_ = true;
        lu_.compute(a);
        if (!lu_.isInvertible()) throw Error(ErrorCode::singular_system, "dense factorization failed");
      }
    } else {
      Eigen::SparseMatrix<double> a(n_, n_);
      std::vector<Eigen::Triplet<double>> scaled;
      scaled.reserve(entries.size());
      for (const auto& e : entries) scaled.emplace_back(e.row(), e.col(), e.value() * scale_(e.row()) * scale_(e.col()));
      a.setFromTriplets(scaled.begin(), scaled.end());
      ldlt_.compute(a);
      if (ldlt_.info() != Eigen::Success) throw Error(ErrorCode::singular_system, "sparse LDL^T factorization failed");
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    const Eigen::VectorXd scaled = rhs.cwiseProduct(scale_);
    Eigen::VectorXd y = !dense_ ? Eigen::VectorXd(ldlt_.solve(scaled))
                        : pivoted_ ? Eigen::VectorXd(lu_.solve(scaled))
                                   : Eigen::VectorXd(llt_.solve(scaled));
    return y.cwiseProduct(scale_);
  }

 private:
  Eigen::Index n_;
  Eigen::VectorXd scale_;
  bool dense_ = true;
  bool pivoted_ = false;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

}  // namespace detail

/// Solves L p = b with p[grounded] = 0.
///
/// Nodes are split by connectivity through live arcs. The component holding
/// the grounded node is solved exactly. Every other component must carry no
/// injection; each such component is assigned a single pressure chosen so the
/// net flow through its (dead) boundary arcs is zero, which keeps flow
/// conservation intact while avoiding the near-singular pivots those arcs
/// would otherwise produce. Components with no conducting boundary at all sit
/// at pressure zero.
inline PressureVector solve(const PoissonSystem& sys) {
  const std::size_t n = sys.dimension;
  const auto ground = static_cast<std::size_t>(sys.grounded_node);
  const std::size_t m = sys.weights.size();

  detail::UnionFind uf(n);
  for (std::size_t a = 0; a < m; ++a)
    if (sys.live[a]) uf.unite(static_cast<std::size_t>(sys.tails[a]), static_cast<std::size_t>(sys.heads[a]));
  const std::size_t main_root = uf.find(ground);

  std::vector<std::size_t> root(n);
  for (std::size_t i = 0; i < n; ++i) {
    root[i] = uf.find(i);
    if (root[i] != main_root && sys.injections[i] != 0.0)
      throw Error(ErrorCode::disconnected_injection,
                  "node " + std::to_string(i) + " has injection but no live path to the grounded node");
  }

  PressureVector out;
  out.pressure.assign(n, 0.0);

  // Main component, grounded node removed.
  std::vector<std::ptrdiff_t> index(n, -1);
  std::size_t dim = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (i != ground && root[i] == main_root) index[i] = static_cast<std::ptrdiff_t>(dim++);

  std::vector<std::size_t> main_arcs;
  if (dim > 0) {
    std::vector<Eigen::Triplet<double>> entries;
    for (std::size_t a = 0; a < m; ++a) {
      const auto t = static_cast<std::size_t>(sys.tails[a]);
      const auto h = static_cast<std::size_t>(sys.heads[a]);
      const double w = sys.weights[a];
      if (w == 0.0 || root[t] != main_root || root[h] != main_root) continue;
      main_arcs.push_back(a);
      const auto it = index[t];
      const auto ih = index[h];
      if (it >= 0) entries.emplace_back(it, it, w);
      if (ih >= 0) entries.emplace_back(ih, ih, w);
      if (it >= 0 && ih >= 0) {
        entries.emplace_back(it, ih, -w);
        entries.emplace_back(ih, it, -w);
      }
    }
    const detail::SpdSolver solver(dim, entries);

    Eigen::VectorXd rhs(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i)
      if (index[i] >= 0) rhs(index[i]) = sys.injections[i];
    Eigen::VectorXd x = solver.solve(rhs);

    auto scatter = [&](const Eigen::VectorXd& v) {
      for (std::size_t i = 0; i < n; ++i)
        if (index[i] >= 0) out.pressure[i] = v(index[i]);
    };
    auto main_residual = [&]() {
      Eigen::VectorXd r = rhs;
      for (std::size_t a : main_arcs) {
        const auto t = static_cast<std::size_t>(sys.tails[a]);
        const auto h = static_cast<std::size_t>(sys.heads[a]);
        const double q = sys.weights[a] * (out.pressure[t] - out.pressure[h]);
        if (index[t] >= 0) r(index[t]) -= q;
        if (index[h] >= 0) r(index[h]) += q;
      }
      return r;
    };

    scatter(x);
    const double target = 1e-12 * std::max(1.0, rhs.norm());
    for (int refine = 0; refine < 3; ++refine) {
      const Eigen::VectorXd r = main_residual();
      if (r.norm() <= target) break;
      x += solver.solve(r);
      scatter(x);
    }
  }

  // Floating components collapse to one pressure each.
  std::vector<std::ptrdiff_t> comp(n, -1);
  std::vector<std::size_t> comp_roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (root[i] == main_root) continue;
    auto found = std::find(comp_roots.begin(), comp_roots.end(), root[i]);
    if (found == comp_roots.end()) {
      comp_roots.push_back(root[i]);
      found = comp_roots.end() - 1;
    }
    comp[i] = found - comp_roots.begin();
    ++out.floating_nodes;
  }

  if (!comp_roots.empty()) {
    const std::size_t f = comp_roots.size();
    Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(f));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f));
    detail::UnionFind reach(f + 1);  // slot f is the main component
    for (std::size_t a = 0; a < m; ++a) {
      const double w = sys.weights[a];
      if (w == 0.0) continue;
      const auto t = static_cast<std::size_t>(sys.tails[a]);
      const auto h = static_cast<std::size_t>(sys.heads[a]);
      const auto ct = comp[t];
      const auto ch = comp[h];
      if (ct == ch) continue;  // internal to one component (or both in main)
      const std::size_t st = ct < 0 ? f : static_cast<std::size_t>(ct);
      const std::size_t sh = ch < 0 ? f : static_cast<std::size_t>(ch);
      reach.unite(st, sh);
      if (ct >= 0) {
        coupling(ct, ct) += w;
        if (ch >= 0) coupling(ct, ch) -= w;
        else rhs(ct) += w * out.pressure[h];
      }
      if (ch >= 0) {
        coupling(ch, ch) += w;
        if (ct >= 0) coupling(ch, ct) -= w;
        else rhs(ch) += w * out.pressure[t];
      }
    }
    std::vector<Eigen::Index> active;
    for (std::size_t c = 0; c < f; ++c)
      if (reach.find(c) == reach.find(f)) active.push_back(static_cast<Eigen::Index>(c));
    Eigen::VectorXd level = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f));
    if (!active.empty()) {
      const auto k = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd sub(k, k);
      Eigen::VectorXd b(k);
      Eigen::VectorXd s(k);
      for (Eigen::Index i = 0; i < k; ++i) s(i) = 1.0 / std::sqrt(coupling(active[i], active[i]));
      for (Eigen::Index i = 0; i < k; ++i) {
        b(i) = rhs(active[i]) * s(i);
        for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = coupling(active[i], active[j]) * s(i) * s(j);
      }
      const Eigen::VectorXd y = sub.fullPivLu().solve(b).cwiseProduct(s);
      for (Eigen::Index i = 0; i < k; ++i) level(active[i]) = y(i);
    }
    for (std::size_t i = 0; i < n; ++i)
      if (comp[i] >= 0) out.pressure[i] = level(comp[i]);
  }

  out.pressure[ground] = 0.0;
  const auto r = poisson_residual(sys, out.pressure);
  out.residual_norm = norm2(r);
  return out;
}

/// Poiseuille flow Q = (D/L)(p_tail - p_head); directed graphs clamp
/// negative values to zero.
inline std::vector<double> edge_flows(const Graph& graph, std::span<const double> conductivity,
                                      std::span<const double> lengths, std::span<const double> pressure) {
  require_arc_vector(graph, conductivity, "conductivity");
  require_arc_vector(graph, lengths, "lengths");
  require_node_vector(graph, pressure, "pressure");
  std::vector<double> q(graph.arc_count());
  const bool clamp = graph.directed();
  for (const Arc& a : graph.arcs()) {
    const auto i = static_cast<std::size_t>(a.id);
    const double d = conductivity[i];
    double v = d == 0.0 ? 0.0 : d / lengths[i] * (pressure[static_cast<std::size_t>(a.tail)] - pressure[static_cast<std::size_t>(a.head)]);
    if (clamp) v = std::max(0.0, v);
    q[i] = v;
  }
  return q;
}

}  // namespace physarum
