#include "ckg/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <set>

namespace ckg {

namespace {

using Edge = std::pair<int, int>;

Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

double cross2(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec vec1(double x) {
  Vec v(1);
  v << x;
  return v;
}

double edge_length(const BaseMetric& metric, const Vec& a, const Vec& b) {
  const Vec mid = 0.5 * (a + b);
  return metric.norm(mid, b - a);
}

// Minimum over the segment [a, b] of d(p) + |x_v - p|_G with d linear along
// the segment; a, b given relative to x_v.
double eikonal_update(const Mat& G, const Vec& ea, const Vec& eb, double da, double db) {
  const Vec w = eb - ea;
  const double delta = db - da;
  const double A = ea.dot(G * w);
  const double B = w.dot(G * w);
  const double C = ea.dot(G * ea);
  auto f = [&](double s) {
    const Vec p = ea + s * w;
    return (1.0 - s) * da + s * db + std::sqrt(std::max(0.0, p.dot(G * p)));
  };
  double best = std::min(f(0.0), f(1.0));
  if (B > delta * delta && B > 0.0) {
    const double root = std::abs(delta) * std::sqrt(std::max(0.0, (B * C - A * A) / (B - delta * delta)));
    for (double s : {(-A + root) / B, (-A - root) / B}) {
      if (s > 0.0 && s < 1.0) best = std::min(best, f(s));
    }
  }
  return best;
}

}  // namespace

std::uint64_t DomainMesh::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter++;
}

DomainMesh::DomainMesh(std::shared_ptr<const BaseMetric> metric, std::vector<Vec> vertices,
                       std::vector<Cell> cells, std::vector<std::vector<int>> boundary_loops,
                       std::optional<PresetShape> preset)
    : id_(next_id()),
      metric_(std::move(metric)),
      dim_(metric_ ? metric_->dim() : 0),
      vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      loops_(std::move(boundary_loops)),
      preset_(preset) {
  if (!metric_) throw MeshError("mesh needs a base metric");
  if (dim_ != 1 && dim_ != 2) throw MeshError("meshes are provided for n = 1 and n = 2 only");
  validate_and_orient();
  build_topology();
  build_geometry();
  build_boundary_data();
  build_distance();
}

int DomainMesh::boundary_index_checked(int v) const {
  const int b = boundary_index_[v];
  if (b < 0) throw ParameterError("vertex " + std::to_string(v) + " is not a boundary vertex");
  return b;
}

void DomainMesh::validate_and_orient() {
  const int nv = vertex_count();
  if (nv == 0 || cells_.empty()) throw MeshError("mesh has no cells");
  for (const auto& v : vertices_) {
    if (v.size() != dim_) throw MeshError("vertex dimension does not match the base metric");
    if (!v.allFinite()) throw MeshError("vertex coordinates must be finite");
  }
  for (size_t c = 0; c < cells_.size(); ++c) {
    for (int a = 0; a <= dim_; ++a) {
      if (cells_[c][a] < 0 || cells_[c][a] >= nv) {
        throw MeshError("cell " + std::to_string(c) + " references a missing vertex");
      }
    }
    double orient = 0.0;
    if (dim_ == 2) {
      orient = cross2(vertices_[cells_[c][1]] - vertices_[cells_[c][0]],
                      vertices_[cells_[c][2]] - vertices_[cells_[c][0]]);
    } else {
      orient = vertices_[cells_[c][1]](0) - vertices_[cells_[c][0]](0);
      cells_[c][2] = -1;
    }
    if (!(orient > 0.0)) {
      throw MeshError("cell " + std::to_string(c) + " is not positively oriented");
    }
  }

  if (dim_ == 1) {
    std::vector<int> count(nv, 0);
    for (const auto& c : cells_) {
      ++count[c[0]];
      ++count[c[1]];
    }
    std::vector<std::vector<int>> loops;
    for (int v = 0; v < nv; ++v) {
      if (count[v] == 1) loops.push_back({v});
      if (count[v] > 2) throw MeshError("interval mesh vertex shared by more than two segments");
    }
    if (loops.empty()) throw MeshError("mesh has an empty boundary");
    loops_ = std::move(loops);
    return;
  }

  std::map<Edge, std::vector<int>> edge_cells;
  for (size_t c = 0; c < cells_.size(); ++c) {
    for (int a = 0; a < 3; ++a) {
      edge_cells[make_edge(cells_[c][a], cells_[c][(a + 1) % 3])].push_back(static_cast<int>(c));
    }
  }
  std::set<Edge> boundary_edges;
  for (const auto& [e, cs] : edge_cells) {
    if (cs.size() > 2) {
      throw MeshError("edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
                      ") shared by more than two triangles");
    }
    if (cs.size() == 1) boundary_edges.insert(e);
  }
  if (loops_.empty() || boundary_edges.empty()) throw MeshError("mesh has an empty boundary");

  std::set<Edge> loop_edges;
  for (auto& loop : loops_) {
    if (loop.size() < 3) throw MeshError("boundary loop with fewer than three vertices");
    for (size_t i = 0; i < loop.size(); ++i) {
      const Edge e = make_edge(loop[i], loop[(i + 1) % loop.size()]);
      if (!boundary_edges.count(e)) {
        throw MeshError("boundary loop edge (" + std::to_string(e.first) + "," +
                        std::to_string(e.second) + ") is not a boundary edge of the triangulation");
      }
      loop_edges.insert(e);
    }
    // Domain on the left of the loop direction.
    const int a = loop[0], b = loop[1];
    const int c = edge_cells[make_edge(a, b)].front();
    int third = -1;
    for (int k = 0; k < 3; ++k) {
      if (cells_[c][k] != a && cells_[c][k] != b) third = cells_[c][k];
    }
    if (cross2(vertices_[b] - vertices_[a], vertices_[third] - vertices_[a]) < 0.0) {
      std::reverse(loop.begin(), loop.end());
    }
  }
  if (loop_edges.size() != boundary_edges.size()) {
    throw MeshError("boundary loops do not cover every boundary edge");
  }
}

void DomainMesh::build_topology() {
  const int nv = vertex_count();
  interior_index_.assign(nv, 0);
  boundary_index_.assign(nv, -1);
  for (const auto& loop : loops_) {
    for (int v : loop) {
      if (boundary_index_[v] >= 0) throw MeshError("vertex listed twice on the boundary");
      boundary_index_[v] = static_cast<int>(boundary_vertices_.size());
      boundary_vertices_.push_back(v);
      interior_index_[v] = -1;
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (interior_index_[v] >= 0) {
      interior_index_[v] = static_cast<int>(interior_vertices_.size());
      interior_vertices_.push_back(v);
    }
  }
  vertex_cells_.assign(nv, {});
  std::vector<std::set<int>> nbr(nv);
  for (int c = 0; c < cell_count(); ++c) {
    const auto nodes = cell(c);
    for (int a : nodes) {
      vertex_cells_[a].push_back(c);
      for (int b : nodes) {
        if (a != b) nbr[a].insert(b);
      }
    }
  }
  neighbors_.resize(nv);
  for (int v = 0; v < nv; ++v) {
    if (vertex_cells_[v].empty()) throw MeshError("vertex " + std::to_string(v) + " has no cells");
    neighbors_[v].assign(nbr[v].begin(), nbr[v].end());
  }
}

void DomainMesh::build_geometry() {
  const int nc = cell_count();
  measure_.resize(nc);
  grads_.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const auto nodes = cell(c);
    if (dim_ == 2) {
      Mat J(2, 2);
      J.col(0) = vertices_[nodes[1]] - vertices_[nodes[0]];
      J.col(1) = vertices_[nodes[2]] - vertices_[nodes[0]];
      measure_[c] = 0.5 * J.determinant();
      const Mat Jinv = J.inverse();
      Mat G(2, 3);
      G.col(1) = Jinv.row(0).transpose();
      G.col(2) = Jinv.row(1).transpose();
      G.col(0) = -(G.col(1) + G.col(2));
      grads_[c] = G;
    } else {
      const double L = vertices_[nodes[1]](0) - vertices_[nodes[0]](0);
      measure_[c] = L;
      Mat G(1, 2);
      G << -1.0 / L, 1.0 / L;
      grads_[c] = G;
    }
  }

  if (dim_ == 2) {
    quad_.bary = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
    quad_.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  } else {
    const double g = 0.5 / std::sqrt(3.0);
    quad_.bary = {{0.5 + g, 0.5 - g, 0.0}, {0.5 - g, 0.5 + g, 0.0}};
    quad_.weights = {0.5, 0.5};
  }

  lumped_.assign(vertex_count(), 0.0);
  for (int c = 0; c < nc; ++c) {
    const auto nodes = cell(c);
    for (size_t q = 0; q < quad_.weights.size(); ++q) {
      const double w = measure_[c] * quad_.weights[q] * metric_->volume_density(point(c, quad_.bary[q]));
      for (int a = 0; a <= dim_; ++a) lumped_[nodes[a]] += w * quad_.bary[q][a];
    }
  }

  h_ = 0.0;
  for (int v = 0; v < vertex_count(); ++v) {
    for (int w : neighbors_[v]) {
      if (w > v) h_ = std::max(h_, edge_length(*metric_, vertices_[v], vertices_[w]));
    }
  }
}

Vec DomainMesh::centroid(int c) const {
  const auto nodes = cell(c);
  Vec x = Vec::Zero(dim_);
  for (int a : nodes) x += vertices_[a];
  return x / static_cast<double>(nodes.size());
}

Vec DomainMesh::point(int c, const std::array<double, 3>& bary) const {
  const auto nodes = cell(c);
  Vec x = Vec::Zero(dim_);
  for (int a = 0; a <= dim_; ++a) x += bary[a] * vertices_[nodes[a]];
  return x;
}

std::vector<int> DomainMesh::two_ring(int v) const {
  std::set<int> ring;
  for (int w : neighbors_[v]) {
    ring.insert(w);
    for (int x : neighbors_[w]) ring.insert(x);
  }
  ring.erase(v);
  return {ring.begin(), ring.end()};
}

std::optional<std::pair<int, std::array<double, 3>>> DomainMesh::locate(const Vec& u) const {
  constexpr double tol = -1e-12;
  for (int c = 0; c < cell_count(); ++c) {
    const auto nodes = cell(c);
    const Mat& G = grads_[c];
    std::array<double, 3> bary{0.0, 0.0, 0.0};
    const Vec rel = u - vertices_[nodes[0]];
    double sum = 0.0;
    for (int a = 1; a <= dim_; ++a) {
      bary[a] = G.col(a).dot(rel);
      sum += bary[a];
    }
    bary[0] = 1.0 - sum;
    bool inside = true;
    for (int a = 0; a <= dim_; ++a) inside = inside && bary[a] >= tol;
    if (inside) return std::make_pair(c, bary);
  }
  return std::nullopt;
}

double DomainMesh::polyline_curvature(const BaseMetric& metric, const Vec& prev, const Vec& at,
                                      const Vec& next, const Vec& eta, bool* low_confidence) {
  const double a = metric.norm(at, at - prev);
  const double b = metric.norm(at, next - at);
  bool low = false;
  if (!(a > 0.0) || !(b > 0.0)) {
    if (low_confidence) *low_confidence = true;
    return 0.0;
  }
  const Vec dp = next - at;
  const Vec dm = at - prev;
  const double denom = a * b * (a + b);
  const Vec x1 = (a * a * dp + b * b * dm) / denom;
  const Vec x2 = 2.0 * (a * dp - b * dm) / denom;
  Vec acc = x2;
  const auto gam = metric.christoffel(at);
  for (int k = 0; k < at.size(); ++k) acc(k) += x1.dot(gam[k] * x1);
  const double speed2 = metric.inner(at, x1, x1);
  const double chord = (next - prev).norm();
  if (std::abs(cross2(dp, dm)) <= 1e-12 * chord * chord) low = true;
  if (std::max(a, b) > 10.0 * std::min(a, b)) low = true;
  if (low_confidence) *low_confidence = low;
  return metric.inner(at, acc, eta) / speed2;
}

void DomainMesh::build_boundary_data() {
  const size_t nb = boundary_vertices_.size();
  normals_.assign(nb, Vec());
  curvature_.assign(nb, 0.0);
  low_confidence_.assign(nb, false);

  if (preset_) {
    for (size_t i = 0; i < nb; ++i) {
      const Vec& x = vertices_[boundary_vertices_[i]];
      switch (preset_->kind) {
        case PresetShape::Kind::disk:
          normals_[i] = -x / x.norm();
          curvature_[i] = 1.0 / preset_->a;
          break;
        case PresetShape::Kind::annulus: {
          const double r = x.norm();
          const bool outer = std::abs(r - preset_->b) < std::abs(r - preset_->a);
          normals_[i] = (outer ? -1.0 : 1.0) * x / r;
          curvature_[i] = outer ? 1.0 / preset_->b : -1.0 / preset_->a;
          break;
        }
        case PresetShape::Kind::cap: {
          const double r = x.norm();
          normals_[i] = -0.5 * (1.0 + r * r) * x / r;
          curvature_[i] = 1.0 / std::tan(preset_->a);
          break;
        }
        case PresetShape::Kind::interval:
          normals_[i] = vec1(std::abs(x(0) - preset_->a) < std::abs(x(0) - preset_->b) ? 1.0 : -1.0);
          curvature_[i] = 0.0;
          break;
      }
    }
    return;
  }

  if (dim_ == 1) {
    for (size_t i = 0; i < nb; ++i) {
      const int v = boundary_vertices_[i];
      const int w = neighbors_[v].front();
      const Vec dir = vec1(vertices_[w](0) > vertices_[v](0) ? 1.0 : -1.0);
      normals_[i] = dir / metric_->norm(vertices_[v], dir);
    }
    return;
  }

  for (const auto& loop : loops_) {
    const size_t m = loop.size();
    for (size_t i = 0; i < m; ++i) {
      const int v = loop[i];
      const Vec& prev = vertices_[loop[(i + m - 1) % m]];
      const Vec& next = vertices_[loop[(i + 1) % m]];
      const Vec& x = vertices_[v];
      const Vec T = next - prev;
      const Vec left = vec2(-T(1), T(0));
      Vec eta = metric_->inverse(x) * left;
      eta /= metric_->norm(x, eta);
      const int bi = boundary_index_[v];
      normals_[bi] = eta;
      bool low = false;
      curvature_[bi] = polyline_curvature(*metric_, prev, x, next, eta, &low);
      low_confidence_[bi] = low;
    }
  }
}

void DomainMesh::build_distance() {
  dist_ = distance_to_boundary(*this);
  suspect_.assign(cell_count(), false);
  const double tol = 10.0 * h_;
  for (int c = 0; c < cell_count(); ++c) {
    const auto nodes = cell(c);
    Vec g = Vec::Zero(dim_);
    for (int a = 0; a <= dim_; ++a) g += dist_[nodes[a]] * grads_[c].col(a);
    const Vec x = centroid(c);
    const double norm = std::sqrt(g.dot(metric_->inverse(x) * g));
    suspect_[c] = std::abs(norm - 1.0) > tol;
  }

  if (preset_) {
    switch (preset_->kind) {
      case PresetShape::Kind::disk:
        diameter_ = 2.0 * preset_->a;
        break;
      case PresetShape::Kind::annulus:
        diameter_ = 2.0 * preset_->b;
        break;
      case PresetShape::Kind::cap:
        diameter_ = std::min(2.0 * preset_->a, std::numbers::pi);
        break;
      case PresetShape::Kind::interval:
        diameter_ = preset_->b - preset_->a;
        break;
    }
    return;
  }
  // Double sweep of graph distances.
  auto farthest = [this](int src) {
    std::vector<double> d(vertex_count(), kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    d[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
      auto [dv, v] = pq.top();
      pq.pop();
      if (dv > d[v]) continue;
      for (int w : neighbors_[v]) {
        const double nd = dv + edge_length(*metric_, vertices_[v], vertices_[w]);
        if (nd < d[w]) {
          d[w] = nd;
          pq.push({nd, w});
        }
      }
    }
    const auto it = std::max_element(d.begin(), d.end());
    return std::make_pair(static_cast<int>(it - d.begin()), *it);
  };
  const int a = farthest(0).first;
  diameter_ = farthest(a).second;
}

// ------------------------------------------------------------- JSON exchange

std::shared_ptr<const DomainMesh> DomainMesh::from_json(const nlohmann::json& doc,
                                                        std::shared_ptr<const BaseMetric> metric) {
  if (!doc.is_object()) throw MeshError("mesh document must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "vertices" && key != "triangles" && key != "segments" && key != "boundary") {
      throw MeshError("unknown mesh key '" + key + "'");
    }
  }
  const int dim = metric->dim();
  std::vector<Vec> vertices;
  for (const auto& p : doc.at("vertices")) {
    if (!p.is_array() || static_cast<int>(p.size()) != dim) {
      throw MeshError("vertex entries must have " + std::to_string(dim) + " coordinates");
    }
    Vec v(dim);
    for (int k = 0; k < dim; ++k) v(k) = p[k].get<double>();
    vertices.push_back(v);
  }
  const char* key = dim == 2 ? "triangles" : "segments";
  std::vector<Cell> cells;
  for (const auto& t : doc.at(key)) {
    if (!t.is_array() || static_cast<int>(t.size()) != dim + 1) {
      throw MeshError(std::string(key) + " entries must have " + std::to_string(dim + 1) + " indices");
    }
    Cell c{-1, -1, -1};
    for (int k = 0; k <= dim; ++k) c[k] = t[k].get<int>();
    cells.push_back(c);
  }
  std::vector<std::vector<int>> loops;
  if (doc.contains("boundary")) {
    for (const auto& l : doc.at("boundary")) loops.push_back(l.get<std::vector<int>>());
  }
  return std::make_shared<const DomainMesh>(std::move(metric), std::move(vertices), std::move(cells),
                                            std::move(loops));
}

nlohmann::json DomainMesh::to_json() const {
  nlohmann::json doc;
  doc["vertices"] = nlohmann::json::array();
  for (const auto& v : vertices_) {
    auto p = nlohmann::json::array();
    for (int k = 0; k < dim_; ++k) p.push_back(v(k));
    doc["vertices"].push_back(p);
  }
  const char* key = dim_ == 2 ? "triangles" : "segments";
  doc[key] = nlohmann::json::array();
  for (int c = 0; c < cell_count(); ++c) {
    const auto nodes = cell(c);
    doc[key].push_back(std::vector<int>(nodes.begin(), nodes.end()));
  }
  doc["boundary"] = loops_;
  return doc;
}

// ------------------------------------------------------------------ distance

std::vector<double> distance_to_boundary(const DomainMesh& mesh, const DistanceOptions& opts) {
  const int nv = mesh.vertex_count();
  if (mesh.boundary_vertices().empty()) throw MeshError("distance requested on a mesh without boundary");
  std::vector<double> d(nv, kInf);

  if (const auto& p = mesh.preset()) {
    for (int v = 0; v < nv; ++v) {
      const Vec& x = mesh.vertex(v);
      switch (p->kind) {
        case PresetShape::Kind::disk:
          d[v] = p->a - x.norm();
          break;
        case PresetShape::Kind::annulus:
          d[v] = std::min(x.norm() - p->a, p->b - x.norm());
          break;
        case PresetShape::Kind::cap:
          d[v] = p->a - 2.0 * std::atan(x.norm());
          break;
        case PresetShape::Kind::interval:
          d[v] = std::min(x(0) - p->a, p->b - x(0));
          break;
      }
      if (mesh.is_boundary(v)) d[v] = 0.0;
      d[v] = std::max(0.0, d[v]);
    }
    return d;
  }

  const BaseMetric& metric = mesh.metric();
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (int v : mesh.boundary_vertices()) {
    d[v] = 0.0;
    pq.push({0.0, v});
  }
  std::vector<int> order;
  order.reserve(nv);
  std::vector<bool> done(nv, false);
  while (!pq.empty()) {
    auto [dv, v] = pq.top();
    pq.pop();
    if (done[v]) continue;
    done[v] = true;
    order.push_back(v);
    for (int w : mesh.neighbors(v)) {
      const double nd = dv + edge_length(metric, mesh.vertex(v), mesh.vertex(w));
      if (nd < d[w]) {
        d[w] = nd;
        pq.push({nd, w});
      }
    }
  }

  if (mesh.dim() == 2) {
    for (int sweep = 0; sweep < opts.gauss_seidel_sweeps; ++sweep) {
      for (int v : order) {
        if (mesh.is_boundary(v)) continue;
        const Vec& x = mesh.vertex(v);
        const Mat G = metric.metric(x);
        double best = d[v];
        for (int c : mesh.cells_of_vertex(v)) {
          int others[2];
          int k = 0;
          for (int a : mesh.cell(c)) {
            if (a != v) others[k++] = a;
          }
          const int a = others[0], b = others[1];
          if (!std::isfinite(d[a]) || !std::isfinite(d[b])) continue;
          best = std::min(best, eikonal_update(G, mesh.vertex(a) - x, mesh.vertex(b) - x, d[a], d[b]));
        }
        d[v] = best;
      }
    }
  }
  return d;
}

BoundaryCurvature boundary_mean_curvature(const DomainMesh& mesh, int vertex) {
  return {mesh.boundary_curvature(vertex), mesh.boundary_curvature_low_confidence(vertex)};
}

// ------------------------------------------------------- preset constructors

namespace {

void add_triangle(const std::vector<Vec>& vertices, std::vector<Cell>& cells, int a, int b, int c) {
  if (cross2(vertices[b] - vertices[a], vertices[c] - vertices[a]) < 0.0) std::swap(b, c);
  cells.push_back({a, b, c});
}

// Stitches two concentric rings whose first vertices sit at angle 0.
void stitch_rings(const std::vector<Vec>& vertices, std::vector<Cell>& cells,
                  const std::vector<int>& inner, const std::vector<int>& outer) {
  const int m = static_cast<int>(inner.size());
  const int M = static_cast<int>(outer.size());
  if (m == 1) {
    for (int j = 0; j < M; ++j) add_triangle(vertices, cells, inner[0], outer[j], outer[(j + 1) % M]);
    return;
  }
  // Angular positions (i + 1) / m and (j + 1) / M compared exactly so that
  // ties at the sextant seams are broken the same way on every ring.
  int i = 0, j = 0;
  while (i < m || j < M) {
    const bool outer_first = i >= m || (j < M && static_cast<long>(j + 1) * m <= static_cast<long>(i + 1) * M);
    if (outer_first) {
      add_triangle(vertices, cells, inner[i % m], outer[j % M], outer[(j + 1) % M]);
      ++j;
    } else {
      add_triangle(vertices, cells, inner[i % m], outer[j % M], inner[(i + 1) % m]);
      ++i;
    }
  }
}

std::vector<int> add_ring(std::vector<Vec>& vertices, double radius, int count) {
  std::vector<int> ring;
  for (int j = 0; j < count; ++j) {
    const double a = 2.0 * std::numbers::pi * j / count;
    ring.push_back(static_cast<int>(vertices.size()));
    vertices.push_back(vec2(radius * std::cos(a), radius * std::sin(a)));
  }
  return ring;
}

// Disk-like mesh with N rings at chart radii radius(k), k = 1..N, 6k vertices each.
std::shared_ptr<const DomainMesh> ring_disk(std::shared_ptr<const BaseMetric> metric, int N,
                                            const std::function<double(int)>& radius, PresetShape shape) {
  std::vector<Vec> vertices{vec2(0.0, 0.0)};
  std::vector<Cell> cells;
  std::vector<int> prev{0};
  for (int k = 1; k <= N; ++k) {
    auto ring = add_ring(vertices, radius(k), 6 * k);
    stitch_rings(vertices, cells, prev, ring);
    prev = std::move(ring);
  }
  return std::make_shared<const DomainMesh>(std::move(metric), std::move(vertices), std::move(cells),
                                            std::vector<std::vector<int>>{prev}, shape);
}

}  // namespace

std::shared_ptr<const DomainMesh> make_disk_mesh(double radius, double h) {
  if (!(radius > 0.0) || !(h > 0.0)) throw ParameterError("disk radius and h must be positive");
  const int N = std::max(1, static_cast<int>(std::lround(radius / h)));
  return ring_disk(BaseMetric::flat(2), N, [=](int k) { return radius * k / N; },
                   {PresetShape::Kind::disk, radius, 0.0});
}

std::shared_ptr<const DomainMesh> make_cap_mesh(double theta0, double h) {
  if (!(theta0 > 0.0 && theta0 < std::numbers::pi) || !(h > 0.0)) {
    throw ParameterError("cap angle must lie in (0, pi) and h must be positive");
  }
  const int N = std::max(1, static_cast<int>(std::lround(theta0 / h)));
  return ring_disk(BaseMetric::round_sphere(), N, [=](int k) { return std::tan(0.5 * theta0 * k / N); },
                   {PresetShape::Kind::cap, theta0, 0.0});
}

std::shared_ptr<const DomainMesh> make_annulus_mesh(double r_in, double r_out, double h) {
  if (!(r_in > 0.0 && r_out > r_in) || !(h > 0.0)) throw ParameterError("annulus needs 0 < r_in < r_out");
  const int N = std::max(1, static_cast<int>(std::lround((r_out - r_in) / h)));
  std::vector<Vec> vertices;
  std::vector<Cell> cells;
  std::vector<int> first, prev;
  for (int k = 0; k <= N; ++k) {
    const double r = r_in + (r_out - r_in) * k / N;
    const int count = std::max(6, static_cast<int>(std::lround(2.0 * std::numbers::pi * r / h)));
    auto ring = add_ring(vertices, r, count);
    if (k == 0) {
      first = ring;
    } else {
      stitch_rings(vertices, cells, prev, ring);
    }
    prev = std::move(ring);
  }
  return std::make_shared<const DomainMesh>(BaseMetric::flat(2), std::move(vertices), std::move(cells),
                                            std::vector<std::vector<int>>{prev, first},
                                            PresetShape{PresetShape::Kind::annulus, r_in, r_out});
}

std::shared_ptr<const DomainMesh> make_interval_mesh(double a, double b, double h) {
  if (!(b > a) || !(h > 0.0)) throw ParameterError("interval needs a < b and h > 0");
  const int N = std::max(2, static_cast<int>(std::ceil((b - a) / h - 1e-9)));
  std::vector<Vec> vertices;
  std::vector<Cell> cells;
  for (int i = 0; i <= N; ++i) vertices.push_back(vec1(a + (b - a) * i / N));
  for (int i = 0; i < N; ++i) cells.push_back({i, i + 1, -1});
  return std::make_shared<const DomainMesh>(BaseMetric::flat(1), std::move(vertices), std::move(cells),
                                            std::vector<std::vector<int>>{},
                                            PresetShape{PresetShape::Kind::interval, a, b});
}

std::optional<double> preset_level_curvature(const PresetShape& shape, double eps, bool outer) {
  switch (shape.kind) {
    case PresetShape::Kind::disk:
      if (!(eps >= 0.0 && eps < shape.a)) return std::nullopt;
      return 1.0 / (shape.a - eps);
    case PresetShape::Kind::annulus: {
      if (!(eps >= 0.0 && 2.0 * eps < shape.b - shape.a)) return std::nullopt;
      return outer ? 1.0 / (shape.b - eps) : -1.0 / (shape.a + eps);
    }
    case PresetShape::Kind::cap:
      if (!(eps >= 0.0 && eps < shape.a)) return std::nullopt;
      return 1.0 / std::tan(shape.a - eps);
    case PresetShape::Kind::interval:
      if (!(eps >= 0.0 && 2.0 * eps < shape.b - shape.a)) return std::nullopt;
      return 0.0;
  }
  return std::nullopt;
}

}  // namespace ckg
