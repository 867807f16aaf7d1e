#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "l0dc/fem.hpp"

namespace l0dc {

double TriMesh::signed_area(Index t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Point2& a = nodes[static_cast<std::size_t>(tri[0])];
  const Point2& b = nodes[static_cast<std::size_t>(tri[1])];
  const Point2& c = nodes[static_cast<std::size_t>(tri[2])];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double TriMesh::max_diameter() const {
  double h = 0.0;
  for (const auto& tri : triangles) {
    for (int e = 0; e < 3; ++e) {
      const Point2& p = nodes[static_cast<std::size_t>(tri[e])];
      const Point2& q = nodes[static_cast<std::size_t>(tri[(e + 1) % 3])];
      h = std::max(h, std::hypot(p.x - q.x, p.y - q.y));
    }
  }
  return h;
}

TriMesh build_structured_mesh(int n) {
  if (n < 2) throw MeshError("structured mesh needs n >= 2, got " + std::to_string(n));
  TriMesh mesh;
  mesh.h_target = 1.0 / n;
  const auto stride = static_cast<Index>(n + 1);
  mesh.nodes.reserve(static_cast<std::size_t>(stride * stride));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      mesh.nodes.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  mesh.triangles.reserve(static_cast<std::size_t>(2 * n * n));
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const Index p00 = j * stride + i;
      const Index p10 = p00 + 1;
      const Index p01 = p00 + stride;
      const Index p11 = p01 + 1;
      mesh.triangles.push_back({p00, p10, p11});
      mesh.triangles.push_back({p00, p11, p01});
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

void finalize_mesh(TriMesh& mesh) {
  const Index n_nodes = mesh.num_nodes();
  if (n_nodes == 0 || mesh.triangles.empty()) throw MeshError("mesh has no nodes or no triangles");
  std::vector<int> uses(static_cast<std::size_t>(n_nodes), 0);
  std::map<std::pair<Index, Index>, int> edge_count;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    for (Index v : tri) {
      if (v < 0 || v >= n_nodes) {
        throw MeshError("triangle " + std::to_string(t) + " references node " + std::to_string(v) +
                        " outside [0, " + std::to_string(n_nodes) + ")");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw MeshError("triangle " + std::to_string(t) + " repeats a vertex");
    }
    const double area = mesh.signed_area(t);
    if (area == 0.0) throw MeshError("triangle " + std::to_string(t) + " is degenerate");
    if (area < 0.0) throw MeshError("triangle " + std::to_string(t) + " is inverted");
    for (int e = 0; e < 3; ++e) {
      ++uses[static_cast<std::size_t>(tri[e])];
      const Index a = tri[e];
      const Index b = tri[(e + 1) % 3];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (Index v = 0; v < n_nodes; ++v) {
    if (uses[static_cast<std::size_t>(v)] == 0) {
      throw MeshError("node " + std::to_string(v) + " is dangling (belongs to no triangle)");
    }
  }
  std::vector<bool> on_boundary(static_cast<std::size_t>(n_nodes), false);
  for (const auto& [edge, count] : edge_count) {
    if (count > 2) throw MeshError("edge shared by more than two triangles");
    if (count == 1) {
      on_boundary[static_cast<std::size_t>(edge.first)] = true;
      on_boundary[static_cast<std::size_t>(edge.second)] = true;
    }
  }
  mesh.boundary_nodes.clear();
  for (Index v = 0; v < n_nodes; ++v) {
    if (on_boundary[static_cast<std::size_t>(v)]) mesh.boundary_nodes.push_back(v);
  }
  if (mesh.h_target == 0.0) mesh.h_target = mesh.max_diameter();
}

namespace {

std::istringstream next_line(std::istream& in, std::size_t& line_no, const char* expect) {
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
  }
  throw MeshError(std::string("unexpected end of file, expected ") + expect);
}

Index read_header(std::istream& in, std::size_t& line_no, const std::string& keyword) {
  auto ls = next_line(in, line_no, keyword.c_str());
  std::string word;
  long long count = -1;
  if (!(ls >> word >> count) || word != keyword || count < 0) {
    throw MeshError("line " + std::to_string(line_no) + ": expected '" + keyword + " <count>'");
  }
  return static_cast<Index>(count);
}

}  // namespace

TriMesh read_mesh(std::istream& in) {
  std::size_t line_no = 0;
  TriMesh mesh;
  const Index n_nodes = read_header(in, line_no, "nodes");
  mesh.nodes.reserve(static_cast<std::size_t>(n_nodes));
  for (Index i = 0; i < n_nodes; ++i) {
    auto ls = next_line(in, line_no, "node coordinates");
    Point2 p;
    if (!(ls >> p.x >> p.y)) {
      throw MeshError("line " + std::to_string(line_no) + ": expected 'x y'");
    }
    mesh.nodes.push_back(p);
  }
  const Index n_tri = read_header(in, line_no, "triangles");
  mesh.triangles.reserve(static_cast<std::size_t>(n_tri));
  for (Index t = 0; t < n_tri; ++t) {
    auto ls = next_line(in, line_no, "triangle indices");
    long long a = 0, b = 0, c = 0;
    if (!(ls >> a >> b >> c)) {
      throw MeshError("line " + std::to_string(line_no) + ": expected 'i j k'");
    }
    mesh.triangles.push_back({static_cast<Index>(a), static_cast<Index>(b), static_cast<Index>(c)});
  }
  finalize_mesh(mesh);
  return mesh;
}

TriMesh import_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const TriMesh& mesh) {
  out << "nodes " << mesh.nodes.size() << '\n' << std::setprecision(17);
  for (const auto& p : mesh.nodes) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void export_mesh(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file " + path.string());
  write_mesh(out, mesh);
}

Vector read_field(std::istream& in) {
  std::size_t line_no = 0;
  const Index n = read_header(in, line_no, "field");
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    auto ls = next_line(in, line_no, "field value");
    if (!(ls >> v[i])) throw MeshError("line " + std::to_string(line_no) + ": expected a value");
  }
  return v;
}

Vector import_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open field file " + path.string());
  return read_field(in);
}

void write_field(std::ostream& out, const Vector& values) {
  out << "field " << values.size() << '\n' << std::setprecision(17);
  for (Index i = 0; i < values.size(); ++i) out << values[i] << '\n';
}

void export_field(const std::filesystem::path& path, const Vector& values) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write field file " + path.string());
  write_field(out, values);
}

}  // namespace l0dc
