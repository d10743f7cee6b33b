#include "anisoadapt/remesh.hpp"

#include <algorithm>
#include <cstdio>
#include <queue>
#include <tuple>

#include "anisoadapt/errors.hpp"

namespace aniso {

double metric_edge_length(Vec2 p1, Vec2 p2, const SymMat2& m1, const SymMat2& m2) {
  Vec2 e = p2 - p1;
  double qa = std::max(m1.quad(e), 0.0);
  double qb = std::max(m2.quad(e), 0.0);
  return 0.5 * (std::sqrt(qa) + std::sqrt(qb));
}

namespace {

SymMat2 sym_log(const SymMat2& m) {
  return sym_map_eigen(m, [](double l) { return std::log(l); });
}

SymMat2 sym_exp(const SymMat2& m) {
  return sym_map_eigen(m, [](double l) { return std::exp(l); });
}

bool straight_between(Vec2 u1, Vec2 v, Vec2 u2) {
  Vec2 e1 = u1 - v, e2 = u2 - v;
  double n1 = norm(e1), n2 = norm(e2);
  if (n1 == 0.0 || n2 == 0.0) return false;
  return std::abs(cross(e1, e2)) <= 1e-12 * n1 * n2 && dot(e1, e2) < 0.0;
}

// Finest common metric: simultaneous reduction of the pencil, keeping the
// larger quadratic form along each generalized eigenvector.
SymMat2 metric_intersect(const SymMat2& a, const SymMat2& b) {
  double da = a.det();
  Mat2 n{(a.yy * b.xx - a.xy * b.xy) / da, (a.yy * b.xy - a.xy * b.yy) / da,
         (a.xx * b.xy - a.xy * b.xx) / da, (a.xx * b.yy - a.xy * b.xy) / da};
  double tr = n.a00 + n.a11;
  double disc = std::sqrt(std::max(tr * tr - 4.0 * n.det(), 0.0));
  double l1 = 0.5 * (tr + disc);
  // Proportional metrics: the pencil is (numerically) a scalar multiple.
  if (disc <= 1e-10 * std::abs(tr)) return l1 >= 1.0 ? b : a;
  auto null_vec = [&n](double l) {
    Vec2 r1{n.a00 - l, n.a01}, r2{n.a10, n.a11 - l};
    return dot(r1, r1) >= dot(r2, r2) ? perp(r1) : perp(r2);
  };
  Vec2 p1 = null_vec(l1), p2 = null_vec(0.5 * (tr - disc));
  Mat2 pinv = Mat2{p1.x, p2.x, p1.y, p2.y}.inverse();
  return congruence(pinv, SymMat2::diag(std::max(a.quad(p1), b.quad(p1)),
                                        std::max(a.quad(p2), b.quad(p2))));
}

// Caps how fast the metric may coarsen across an edge: the metric at one end,
// relaxed by the growth factor (1 + beta * L)^2 over the edge's metric length
// L, must stay dominated by the metric at the other end. Without this the
// size jump at the flank of a refined band is steeper than one element layer
// can absorb, and the transition fills with short misaligned slivers. Updates
// only ever refine and are bounded by the finest metric present, so sweeping
// reaches a fixed point.
void grade_metric_field(const Mesh& m, std::vector<SymMat2>& vm, double beta) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(m.tris.size() * 3);
  for (const Tri& t : m.tris)
    for (int i = 0; i < 3; ++i) {
      int a = t.v[i], b = t.v[(i + 1) % 3];
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  for (int sweep = 0; sweep < 32; ++sweep) {
    bool changed = false;
    for (auto [a, b] : edges) {
      Vec2 e = m.points[b] - m.points[a];
      for (int dir = 0; dir < 2; ++dir) {
        int s = dir ? b : a, t = dir ? a : b;
        double l = std::sqrt(std::max(vm[s].quad(e), 0.0));
        double f = 1.0 + beta * l;
        SymMat2 capped = metric_intersect(vm[t], vm[s] * (1.0 / (f * f)));
        double diff = std::abs(capped.xx - vm[t].xx) + std::abs(capped.xy - vm[t].xy) +
                      std::abs(capped.yy - vm[t].yy);
        if (diff > 1e-9 * (std::abs(vm[t].xx) + std::abs(vm[t].yy))) {
          vm[t] = capped;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
}

// Element count a unit-edge mesh would need for this vertex metric: the
// density integral with per-element log-Euclidean metric means.
double encoded_count(const Mesh& m, const VertexMetricField& vm) {
  double n = 0.0;
  for (int k = 0; k < m.triangle_count(); ++k) {
    const auto& t = m.tris[k].v;
    SymMat2 lmean =
        (sym_log(vm.m[t[0]]) + sym_log(vm.m[t[1]]) + sym_log(vm.m[t[2]])) * (1.0 / 3.0);
    n += triangle_area(m, k) * std::sqrt(sym_exp(lmean).det());
  }
  return n;
}

}  // namespace

WorkMesh::WorkMesh(const Mesh& m, const VertexMetricField& vm) {
  if (vm.m.size() != static_cast<size_t>(m.vertex_count()))
    throw MeshError("remesh: metric has " + std::to_string(vm.m.size()) +
                    " entries for " + std::to_string(m.vertex_count()) + " vertices");
  for (size_t v = 0; v < vm.m.size(); ++v)
    if (!(vm.m[v].xx > 0.0) || !(vm.m[v].det() > 0.0))
      throw ConfigError("remesh: vertex metric not positive definite at vertex " +
                        std::to_string(v));

  pts_ = m.points;
  met_ = vm.m;
  ptag_ = m.point_tags;
  ptag_.resize(pts_.size(), 0);
  valive_.assign(pts_.size(), 1);
  mob_.assign(pts_.size(), Mobility::Free);
  v2t_.assign(pts_.size(), {});
  vcons_.assign(pts_.size(), {});

  tv_.reserve(m.tris.size());
  for (const Tri& t : m.tris) {
    tv_.push_back(t.v);
    tregion_.push_back(t.region);
  }
  talive_.assign(tv_.size(), 1);
  for (int t = 0; t < static_cast<int>(tv_.size()); ++t) {
    if (!(tri_area(t) > 0.0))
      throw MeshError("remesh: triangle " + std::to_string(t) + " has non-positive area");
    for (int j = 0; j < 3; ++j) v2t_[tv_[t][j]].push_back(t);
  }

  std::map<std::pair<int, int>, int> count;
  for (int t = 0; t < static_cast<int>(tv_.size()); ++t)
    for (int j = 0; j < 3; ++j) ++count[key(tv_[t][(j + 1) % 3], tv_[t][(j + 2) % 3])];
  for (const auto& [k, c] : count)
    if (c > 2)
      throw MeshError("remesh: non-manifold edge " + std::to_string(k.first) + "-" +
                      std::to_string(k.second));
  for (const MeshEdge& e : m.edges) {
    if (!count.count(key(e.a, e.b)))
      throw MeshError("remesh: recorded edge " + std::to_string(e.a) + "-" +
                      std::to_string(e.b) + " is not part of the triangulation");
    cons_[key(e.a, e.b)] = e.tag;
  }
  for (const auto& [k, c] : count)
    if (c == 1 && !cons_.count(k))
      throw MeshError("remesh: boundary edge " + std::to_string(k.first) + "-" +
                      std::to_string(k.second) + " has no record");

  for (const auto& [k, tag] : cons_) {
    vcons_[k.first].push_back(k.second);
    vcons_[k.second].push_back(k.first);
  }
  for (int v = 0; v < static_cast<int>(pts_.size()); ++v) classify_vertex(v);
}

void WorkMesh::classify_vertex(int v) {
  const std::vector<int>& cn = vcons_[v];
  if (cn.empty()) {
    mob_[v] = Mobility::Free;
    return;
  }
  if (cn.size() == 2 && cons_.at(key(v, cn[0])) == cons_.at(key(v, cn[1])) &&
      straight_between(pts_[cn[0]], pts_[v], pts_[cn[1]])) {
    mob_[v] = Mobility::Chain;
    return;
  }
  mob_[v] = Mobility::Fixed;
}

double WorkMesh::area(Vec2 a, Vec2 b, Vec2 c) const { return 0.5 * cross(b - a, c - a); }

double WorkMesh::tri_area(int t) const {
  return area(pts_[tv_[t][0]], pts_[tv_[t][1]], pts_[tv_[t][2]]);
}

int WorkMesh::find_tris(int a, int b, int out[2]) const {
  if (a < 0 || b < 0 || a >= static_cast<int>(pts_.size()) ||
      b >= static_cast<int>(pts_.size()))
    return 0;
  if (!valive_[a] || !valive_[b]) return 0;
  int n = 0;
  for (int t : v2t_[a]) {
    const auto& tv = tv_[t];
    if (tv[0] == b || tv[1] == b || tv[2] == b) {
      if (n < 2) out[n] = t;
      ++n;
    }
  }
  if (n == 2 && out[0] > out[1]) std::swap(out[0], out[1]);
  return n;
}

double WorkMesh::edge_length(int a, int b) const {
  return metric_edge_length(pts_[a], pts_[b], met_[a], met_[b]);
}

// tr(F^T M F) equals the metric edge-length-square sum over 2*sqrt(3), so the
// alignment measure needs no reference-element algebra:
// q_ali = sum_e e^T M e / (4 sqrt(3) sqrt(det M) |K|).
double WorkMesh::alignment(int va, int vb, int vc) const {
  SymMat2 lmean = (sym_log(met_[va]) + sym_log(met_[vb]) + sym_log(met_[vc])) * (1.0 / 3.0);
  SymMat2 m = sym_exp(lmean);
  double suml = m.quad(pts_[vb] - pts_[va]) + m.quad(pts_[vc] - pts_[vb]) +
                m.quad(pts_[va] - pts_[vc]);
  return suml / (4.0 * std::sqrt(3.0) * std::sqrt(m.det()) * area(pts_[va], pts_[vb], pts_[vc]));
}

std::vector<int> WorkMesh::neighbours(int v) const {
  std::vector<int> nb;
  for (int t : v2t_[v])
    for (int j = 0; j < 3; ++j)
      if (tv_[t][j] != v) nb.push_back(tv_[t][j]);
  std::sort(nb.begin(), nb.end());
  nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  return nb;
}

void WorkMesh::drop_tri(int t) {
  talive_[t] = 0;
  for (int j = 0; j < 3; ++j) {
    auto& list = v2t_[tv_[t][j]];
    list.erase(std::remove(list.begin(), list.end(), t), list.end());
  }
}

bool WorkMesh::split_edge(int a, int b, double t) {
  if (!(t > 0.0) || !(t < 1.0)) return false;
  int ts[2];
  int n = find_tris(a, b, ts);
  if (n < 1 || n > 2) return false;

  Vec2 mid = pts_[a] + (pts_[b] - pts_[a]) * t;
  int nv = static_cast<int>(pts_.size());
  std::array<int, 3> kid[4];
  int kidregion[4];
  int nk = 0;
  for (int i = 0; i < n; ++i) {
    std::array<int, 3> t = tv_[ts[i]];
    std::array<int, 3> c1 = t, c2 = t;
    for (int j = 0; j < 3; ++j) {
      if (t[j] == b) c1[j] = nv;
      if (t[j] == a) c2[j] = nv;
    }
    auto carea = [&](const std::array<int, 3>& c) {
      Vec2 p[3];
      for (int j = 0; j < 3; ++j) p[j] = c[j] == nv ? mid : pts_[c[j]];
      return area(p[0], p[1], p[2]);
    };
    if (!(carea(c1) > 0.0) || !(carea(c2) > 0.0)) return false;
    kid[nk] = c1;
    kidregion[nk++] = tregion_[ts[i]];
    kid[nk] = c2;
    kidregion[nk++] = tregion_[ts[i]];
  }

  auto it = cons_.find(key(a, b));
  bool constrained = it != cons_.end();
  int tag = constrained ? it->second : 0;

  pts_.push_back(mid);
  met_.push_back(sym_exp(sym_log(met_[a]) * (1.0 - t) + sym_log(met_[b]) * t));
  ptag_.push_back(tag);
  mob_.push_back(constrained ? Mobility::Chain : Mobility::Free);
  valive_.push_back(1);
  v2t_.push_back({});
  vcons_.push_back({});

  for (int i = 0; i < n; ++i) drop_tri(ts[i]);
  for (int i = 0; i < nk; ++i) {
    int tn = static_cast<int>(tv_.size());
    tv_.push_back(kid[i]);
    tregion_.push_back(kidregion[i]);
    talive_.push_back(1);
    for (int j = 0; j < 3; ++j) v2t_[kid[i][j]].push_back(tn);
  }

  if (constrained) {
    cons_.erase(key(a, b));
    cons_[key(a, nv)] = tag;
    cons_[key(nv, b)] = tag;
    std::replace(vcons_[a].begin(), vcons_[a].end(), b, nv);
    std::replace(vcons_[b].begin(), vcons_[b].end(), a, nv);
    vcons_[nv] = {a, b};
  }
  return true;
}

bool WorkMesh::collapse_edge(int a, int b) {
  int ts[2];
  int n = find_tris(a, b, ts);
  if (n < 1 || n > 2) return false;

  bool constrained = cons_.count(key(a, b)) > 0;
  if (!constrained && n == 2 && tregion_[ts[0]] != tregion_[ts[1]]) return false;

  int victim, survivor;
  if (constrained) {
    bool ca = mob_[a] == Mobility::Chain, cb = mob_[b] == Mobility::Chain;
    if (ca && cb) {
      victim = std::max(a, b);
      survivor = std::min(a, b);
    } else if (ca) {
      victim = a;
      survivor = b;
    } else if (cb) {
      victim = b;
      survivor = a;
    } else {
      return false;
    }
  } else {
    bool fa = mob_[a] == Mobility::Free, fb = mob_[b] == Mobility::Free;
    if (fa && fb) {
      victim = std::max(a, b);
      survivor = std::min(a, b);
    } else if (fa) {
      victim = a;
      survivor = b;
    } else if (fb) {
      victim = b;
      survivor = a;
    } else {
      return false;  // would pull two constrained vertices together
    }
  }

  int chain_u = -1;
  if (constrained) {
    chain_u = vcons_[victim][0] == survivor ? vcons_[victim][1] : vcons_[victim][0];
    if (cons_.count(key(survivor, chain_u))) return false;  // chain would fold onto itself
  }

  // link condition: the only shared neighbours are the opposite vertices
  std::vector<int> na = neighbours(a), nb = neighbours(b), common;
  std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(),
                        std::back_inserter(common));
  std::vector<int> opp;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j)
      if (tv_[ts[i]][j] != a && tv_[ts[i]][j] != b) opp.push_back(tv_[ts[i]][j]);
  std::sort(opp.begin(), opp.end());
  if (common != opp) return false;

  for (int t : v2t_[victim]) {
    if (t == ts[0] || (n == 2 && t == ts[1])) continue;
    std::array<int, 3> cand = tv_[t];
    for (int& x : cand)
      if (x == victim) x = survivor;
    if (!(area(pts_[cand[0]], pts_[cand[1]], pts_[cand[2]]) > 0.0)) return false;
  }

  for (int i = 0; i < n; ++i) drop_tri(ts[i]);
  std::vector<int> move = v2t_[victim];
  for (int t : move) {
    for (int& x : tv_[t])
      if (x == victim) x = survivor;
    v2t_[survivor].push_back(t);
  }
  v2t_[victim].clear();
  valive_[victim] = 0;

  if (constrained) {
    int tag = cons_.at(key(victim, chain_u));
    cons_.erase(key(victim, survivor));
    cons_.erase(key(victim, chain_u));
    cons_[key(survivor, chain_u)] = tag;
    std::replace(vcons_[survivor].begin(), vcons_[survivor].end(), victim, chain_u);
    std::replace(vcons_[chain_u].begin(), vcons_[chain_u].end(), victim, survivor);
    vcons_[victim].clear();
  }
  return true;
}

bool WorkMesh::flip_edge(int a, int b, double margin) {
  if (cons_.count(key(a, b))) return false;
  int ts[2];
  if (find_tris(a, b, ts) != 2) return false;
  int t0 = ts[0], t1 = ts[1];
  if (tregion_[t0] != tregion_[t1]) return false;

  int c = -1, ic = -1, d = -1;
  for (int j = 0; j < 3; ++j)
    if (tv_[t0][j] != a && tv_[t0][j] != b) {
      c = tv_[t0][j];
      ic = j;
    }
  for (int j = 0; j < 3; ++j)
    if (tv_[t1][j] != a && tv_[t1][j] != b) d = tv_[t1][j];
  int x = tv_[t0][(ic + 1) % 3], y = tv_[t0][(ic + 2) % 3];

  int dummy[2];
  if (find_tris(c, d, dummy) > 0) return false;  // degenerate quad
  if (!(area(pts_[x], pts_[d], pts_[c]) > 0.0)) return false;
  if (!(area(pts_[d], pts_[y], pts_[c]) > 0.0)) return false;

  double before = std::max(alignment(tv_[t0][0], tv_[t0][1], tv_[t0][2]),
                           alignment(tv_[t1][0], tv_[t1][1], tv_[t1][2]));
  double after = std::max(alignment(x, d, c), alignment(d, y, c));
  if (!(after * (1.0 + margin) < before)) return false;

  int region = tregion_[t0];
  drop_tri(t0);
  drop_tri(t1);
  for (const std::array<int, 3>& kid : {std::array<int, 3>{x, d, c}, {d, y, c}}) {
    int tn = static_cast<int>(tv_.size());
    tv_.push_back(kid);
    tregion_.push_back(region);
    talive_.push_back(1);
    for (int j = 0; j < 3; ++j) v2t_[kid[j]].push_back(tn);
  }
  return true;
}

bool WorkMesh::smooth_vertex(int v, double relax) {
  if (v < 0 || v >= static_cast<int>(pts_.size()) || !valive_[v]) return false;
  if (mob_[v] == Mobility::Fixed) return false;
  if (!(relax > 0.0) || relax > 1.0) return false;

  // Weight = metric length per unit Euclidean length. At the weighted
  // centroid the metric lengths of opposing edges balance, so smoothing
  // equidistributes in the metric; weighting by the metric length alone
  // balances sqrt(m) * d^2 instead and drains vertices out of refined bands.
  auto weight = [this](int a, int b) {
    double d = norm(pts_[b] - pts_[a]);
    return d > 0.0 ? edge_length(a, b) / d : 0.0;
  };
  Vec2 old = pts_[v];
  Vec2 target;
  if (mob_[v] == Mobility::Free) {
    double wsum = 0.0;
    Vec2 acc{0, 0};
    for (int u : neighbours(v)) {
      double w = weight(v, u);
      acc += pts_[u] * w;
      wsum += w;
    }
    if (!(wsum > 0.0)) return false;
    target = acc / wsum;
  } else {
    int u1 = vcons_[v][0], u2 = vcons_[v][1];
    double w1 = weight(v, u1), w2 = weight(v, u2);
    if (!(w1 + w2 > 0.0)) return false;
    target = (pts_[u1] * w1 + pts_[u2] * w2) / (w1 + w2);
  }

  Vec2 delta = (target - old) * relax;
  for (int attempt = 0; attempt < 4; ++attempt, delta = delta * 0.5) {
    Vec2 cand = old + delta;
    if (cand.x == old.x && cand.y == old.y) return false;
    if (mob_[v] == Mobility::Chain) {
      Vec2 s0 = pts_[vcons_[v][0]];
      Vec2 seg = pts_[vcons_[v][1]] - s0;
      double t = dot(cand - s0, seg) / dot(seg, seg);
      if (t < 0.02 || t > 0.98) continue;
    }
    bool ok = true;
    for (int t : v2t_[v]) {
      Vec2 p[3];
      for (int j = 0; j < 3; ++j) p[j] = tv_[t][j] == v ? cand : pts_[tv_[t][j]];
      if (!(area(p[0], p[1], p[2]) > 0.0)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    pts_[v] = cand;
    return true;
  }
  return false;
}

std::vector<std::pair<int, int>> WorkMesh::edges() const {
  std::vector<std::pair<int, int>> es;
  for (int t = 0; t < static_cast<int>(tv_.size()); ++t) {
    if (!talive_[t]) continue;
    for (int j = 0; j < 3; ++j) es.push_back(key(tv_[t][(j + 1) % 3], tv_[t][(j + 2) % 3]));
  }
  std::sort(es.begin(), es.end());
  es.erase(std::unique(es.begin(), es.end()), es.end());
  return es;
}

double WorkMesh::band_fraction(double l_min, double l_max) const {
  auto es = edges();
  if (es.empty()) return 1.0;
  int in = 0;
  for (auto [a, b] : es) {
    double l = edge_length(a, b);
    if (l >= l_min && l <= l_max) ++in;
  }
  return static_cast<double>(in) / static_cast<double>(es.size());
}

int WorkMesh::alive_triangles() const {
  int n = 0;
  for (char t : talive_) n += t;
  return n;
}

Mesh WorkMesh::extract() const {
  Mesh out;
  std::vector<int> remap(pts_.size(), -1);
  for (int v = 0; v < static_cast<int>(pts_.size()); ++v) {
    if (!valive_[v]) continue;
    remap[v] = static_cast<int>(out.points.size());
    out.points.push_back(pts_[v]);
    out.point_tags.push_back(ptag_[v]);
  }
  for (int t = 0; t < static_cast<int>(tv_.size()); ++t) {
    if (!talive_[t]) continue;
    out.tris.push_back({{remap[tv_[t][0]], remap[tv_[t][1]], remap[tv_[t][2]]}, tregion_[t]});
  }
  for (const auto& [k, tag] : cons_)
    out.edges.push_back({remap[k.first], remap[k.second], tag});
  return out;
}

RemeshResult adapt_mesh(const Mesh& m, const VertexMetricField& vm, const RemeshConfig& cfg) {
  if (!(cfg.l_min > 0.0) || !(cfg.l_min < 1.0) || !(cfg.l_max > 1.0))
    throw ConfigError("remesh thresholds must satisfy 0 < L_min < 1 < L_max");
  if (cfg.max_passes < 1) throw ConfigError("remesh needs at least one pass");
  if (cfg.smooth_iters < 0) throw ConfigError("negative smoothing count");
  if (cfg.flip_margin < 0.0) throw ConfigError("negative flip margin");

  // Grade before anything reads the field: a graded request is the one the
  // local operations can actually reach.
  VertexMetricField graded = vm;
  grade_metric_field(m, graded.m, 0.5);

  // Unit metric edge length means elements of metric area sqrt(3)/4 (the
  // unit-side equilateral); scaling the metric by that factor makes its
  // density integral count elements directly.
  VertexMetricField scaled;
  scaled.m.reserve(graded.m.size());
  const double unit_area = std::sqrt(3.0) / 4.0;
  for (const SymMat2& mk : graded.m) scaled.m.push_back(mk * unit_area);

  WorkMesh w(m, scaled);
  const double n_enc = encoded_count(m, graded);

  // Thermostat: splitting at L_max and collapsing at L_min leaves a factor-2
  // corridor of stable element counts, so a resonant input (uniform lattice,
  // constant metric) can settle well away from the encoded count. Once a pass
  // makes no topology change, nudge the working thresholds by the count
  // mismatch and keep going; the reported band always uses the caller's
  // thresholds.
  double therm = 1.0;

  RemeshResult res;
  double best_band = -1.0;
  bool best_count_ok = false;
  int low_churn = 0;
  auto count_ok = [&](int n) {
    return n_enc <= 0.0 || std::abs(n / n_enc - 1.0) <= 0.3;
  };

  for (int pass = 1; pass <= cfg.max_passes; ++pass) {
    int changed = 0;

    // Longest first; pieces that are still long go back on the heap. A long
    // edge is cut at 1/round(length) so every piece lands near unit length
    // instead of walking down a dyadic ladder.
    std::priority_queue<std::tuple<double, int, int>> splits;
    for (auto [a, b] : w.edges()) {
      double l = w.edge_length(a, b);
      if (l > cfg.l_max * therm) splits.emplace(l, -a, -b);
    }
    while (!splits.empty()) {
      auto [l, na, nb] = splits.top();
      splits.pop();
      int a = -na, b = -nb;
      int nv = w.vertex_count();  // id the new vertex will get
      double k = std::max(2.0, std::round(l));
      if (!w.split_edge(a, b, 1.0 / k)) continue;
      ++changed;
      double rest = w.edge_length(nv, b);
      if (rest > cfg.l_max * therm) splits.emplace(rest, -nv, -b);
    }

    auto es = w.edges();
    std::vector<std::tuple<double, int, int>> work;
    for (auto [a, b] : es) {
      double l = w.edge_length(a, b);
      if (l < cfg.l_min * therm) work.emplace_back(l, a, b);  // shortest first
    }
    std::sort(work.begin(), work.end());
    for (const auto& [l, a, b] : work) changed += w.collapse_edge(a, b);

    for (auto [a, b] : w.edges()) changed += w.flip_edge(a, b, cfg.flip_margin);

    for (int s = 0; s < cfg.smooth_iters; ++s)
      for (int v = 0; v < w.vertex_count(); ++v) w.smooth_vertex(v, 0.5);

    double frac = w.band_fraction(cfg.l_min, cfg.l_max);
    bool cok = count_ok(w.alive_triangles());
    if ((cok && !best_count_ok) || (cok == best_count_ok && frac > best_band)) {
      best_band = frac;
      best_count_ok = cok;
      res.mesh = w.extract();
    }
    res.passes = pass;

    if (changed == 0) {
      if (cok) break;
      double ratio = w.alive_triangles() / n_enc;
      double step = std::clamp(std::sqrt(ratio), 0.8, 1.25);
      double next = std::clamp(therm * step, 0.5, 2.0);
      if (next == therm) break;  // thermostat pinned, count unreachable
      therm = next;
    } else {
      // smoothing keeps a trickle of marginal ops alive indefinitely; once
      // the targets hold and the churn has been noise for two passes, stop
      int n_edges = static_cast<int>(w.edges().size());
      bool settled = cok && frac >= 0.95 && changed <= std::max(2, n_edges / 100);
      low_churn = settled ? low_churn + 1 : 0;
      if (low_churn >= 2) break;
    }
  }

  res.in_band = best_band;
  res.converged = best_count_ok && best_band >= 0.9;
  if (!res.converged) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "remesh settled at %.1f%% of edges in the length band%s after %d passes",
                  100.0 * best_band, best_count_ok ? "" : " with an off-target element count",
                  res.passes);
    res.warning = buf;
  }
  return res;
}

}  // namespace aniso
