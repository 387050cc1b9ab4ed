/**
 * @file hullrep.hpp
 * @brief Immutable tree describing a compact convex set built from SOC
 * leaves, polytopes given by vertices, convex hulls of unions, intersections
 * and affine images.
 */
#pragma once

#include <memory>
#include <string>

#include "quadhull/polytope.hpp"

namespace quadhull {

enum class NodeKind { ConvexSocLeaf, VPolyLeaf, Disjunction, Intersection, AffineImage };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::ConvexSocLeaf: return "soc-leaf";
    case NodeKind::VPolyLeaf: return "vpoly-leaf";
    case NodeKind::Disjunction: return "disjunction";
    case NodeKind::Intersection: return "intersection";
    case NodeKind::AffineImage: return "affine-image";
  }
  return "?";
}

/// {v : A v <= b, E v = e, ||A_j v + b_j|| <= c_j'v + d_j}. Always carries
/// bounding rows so the perspective closure at weight 0 is {0}.
struct SocLeaf {
  HPolytope P;
  Mat E;
  Vect e;
  std::vector<SocConstraint> socs;
};

struct HullNode;
/// nullptr stands for the empty set.
using HullRep = std::shared_ptr<const HullNode>;

struct HullNode {
  NodeKind kind = NodeKind::VPolyLeaf;
  std::size_t dim = 0;  ///< ambient dimension of the represented set
  std::string note;     ///< which construction produced the node
  SocLeaf soc;
  VPolytope vpoly;
  std::vector<HullRep> children;
  AffineMap map;  ///< AffineImage only: child coordinates -> this node's coordinates
};

inline HullRep make_soc_leaf(SocLeaf leaf, std::string note) {
  auto n = std::make_shared<HullNode>();
  n->kind = NodeKind::ConvexSocLeaf;
  n->dim = leaf.P.dim();
  if (leaf.E.cols() != n->dim) leaf.E = Mat(0, n->dim);
  n->soc = std::move(leaf);
  n->note = std::move(note);
  return n;
}

inline HullRep make_vpoly_leaf(VPolytope vp, std::string note) {
  if (vp.vertices.empty()) return nullptr;
  auto n = std::make_shared<HullNode>();
  n->kind = NodeKind::VPolyLeaf;
  n->dim = vp.dim;
  n->vpoly = std::move(vp);
  n->note = std::move(note);
  return n;
}

/// Convex hull of the union; empty children are dropped.
inline HullRep make_disjunction(std::vector<HullRep> children, std::string note) {
  std::erase(children, nullptr);
  if (children.empty()) return nullptr;
  if (children.size() == 1) return children.front();
  auto n = std::make_shared<HullNode>();
  n->kind = NodeKind::Disjunction;
  n->dim = children.front()->dim;
  for (const auto& c : children)
    if (c->dim != n->dim) throw Error(ErrorCode::Internal, "disjunction children differ in dimension");
  n->children = std::move(children);
  n->note = std::move(note);
  return n;
}

/// Empty as soon as one child is empty.
inline HullRep make_intersection(std::vector<HullRep> children, std::string note) {
  for (const auto& c : children)
    if (!c) return nullptr;
  if (children.size() == 1) return children.front();
  auto n = std::make_shared<HullNode>();
  n->kind = NodeKind::Intersection;
  n->dim = children.front()->dim;
  for (const auto& c : children)
    if (c->dim != n->dim) throw Error(ErrorCode::Internal, "intersection children differ in dimension");
  n->children = std::move(children);
  n->note = std::move(note);
  return n;
}

/// Image under f; nested images are composed into one.
inline HullRep apply_map(const AffineMap& f, const HullRep& child, std::string note = {}) {
  if (!child) return nullptr;
  if (f.in_dim() != child->dim) throw Error(ErrorCode::Internal, "affine image: dimension mismatch");
  if (f.is_identity()) return child;
  auto n = std::make_shared<HullNode>();
  n->kind = NodeKind::AffineImage;
  n->dim = f.out_dim();
  n->note = note.empty() ? child->note : std::move(note);
  if (child->kind == NodeKind::AffineImage) {
    n->map = f.after(child->map);
    n->children = child->children;
  } else {
    n->map = f;
    n->children = {child};
  }
  return n;
}

struct TreeShape {
  std::size_t leaves = 0;
  std::size_t depth = 0;  ///< disjunction nesting, a single leaf has depth 1
  std::size_t soc_leaves = 0, vpoly_leaves = 0, disjunctions = 0, intersections = 0, images = 0;
};

inline void measure(const HullRep& h, TreeShape& s, std::size_t level = 1) {
  if (!h) return;
  switch (h->kind) {
    case NodeKind::ConvexSocLeaf: ++s.soc_leaves; break;
    case NodeKind::VPolyLeaf: ++s.vpoly_leaves; break;
    case NodeKind::Disjunction: ++s.disjunctions; break;
    case NodeKind::Intersection: ++s.intersections; break;
    case NodeKind::AffineImage: ++s.images; break;
  }
  if (h->children.empty()) {
    ++s.leaves;
    s.depth = std::max(s.depth, level);
    return;
  }
  const std::size_t next = h->kind == NodeKind::Disjunction ? level + 1 : level;
  for (const auto& c : h->children) measure(c, s, next);
}

inline TreeShape shape(const HullRep& h) {
  TreeShape s;
  measure(h, s);
  return s;
}

}  // namespace quadhull
