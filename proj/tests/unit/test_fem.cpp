#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "l0dc/fem.hpp"

using namespace l0dc;

namespace {

double zero_load(double, double) { return 0.0; }

}  // namespace

TEST_CASE("structured mesh counts and areas") {
  const TriMesh m2 = build_structured_mesh(2);
  CHECK(m2.num_nodes() == 9);
  CHECK(m2.num_triangles() == 8);
  const TriMesh m8 = build_structured_mesh(8);
  CHECK(m8.num_nodes() == 81);
  CHECK(m8.num_triangles() == 128);
  double total = 0.0;
  for (Index t = 0; t < m8.num_triangles(); ++t) {
    CHECK(m8.signed_area(t) == doctest::Approx(1.0 / 128.0).epsilon(1e-14));
    total += m8.signed_area(t);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(build_structured_mesh(1), MeshError);
}

TEST_CASE("boundary nodes are exactly the nodes on the unit square boundary") {
  const TriMesh m = build_structured_mesh(6);
  std::vector<Index> expect;
  for (Index v = 0; v < m.num_nodes(); ++v) {
    const Point2& p = m.nodes[static_cast<std::size_t>(v)];
    if (p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0) expect.push_back(v);
  }
  CHECK(m.boundary_nodes == expect);
}

TEST_CASE("mesh file round trip and validation") {
  const TriMesh m = build_structured_mesh(2);
  std::stringstream buf;
  write_mesh(buf, m);
  const TriMesh back = read_mesh(buf);
  CHECK(back.num_nodes() == m.num_nodes());
  CHECK(back.triangles == m.triangles);
  CHECK(back.boundary_nodes == m.boundary_nodes);

  std::istringstream repeated("nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 0 2\n");
  CHECK_THROWS_AS(read_mesh(repeated), MeshError);
  std::istringstream inverted("nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 2 1\n");
  CHECK_THROWS_AS(read_mesh(inverted), MeshError);
  std::istringstream dangling("nodes 4\n0 0\n1 0\n0 1\n5 5\ntriangles 1\n0 1 2\n");
  CHECK_THROWS_AS(read_mesh(dangling), MeshError);
  std::istringstream truncated("nodes 3\n0 0\n1 0\n");
  CHECK_THROWS_AS(read_mesh(truncated), MeshError);
  std::istringstream range("nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 7\n");
  CHECK_THROWS_AS(read_mesh(range), MeshError);
}

TEST_CASE("field round trip") {
  const Vector v{{0.1, -3.0, 1e-300, 2.5e10}};
  std::stringstream buf;
  write_field(buf, v);
  CHECK(read_field(buf) == v);
}

TEST_CASE("assembled matrices") {
  const FemSystem sys = assemble(build_structured_mesh(8), [](double x, double y) { return x + y * y; });
  const Index n = sys.num_nodes();
  CHECK(sys.num_dofs() == 49);
  CHECK(Eigen::MatrixXd(sys.A - SparseMatrix(sys.A.transpose())).norm() == 0.0);
  const Vector ones = Vector::Ones(n);
  CHECK((sys.A_full * ones).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((sys.M_full * ones - sys.basis_integral).lpNorm<Eigen::Infinity>() < 1e-15);
  std::mt19937_64 gen(1);
  for (int k = 0; k < 10; ++k) {
    const Vector x = testing::random_vector(sys.num_dofs(), gen);
    CHECK(x.dot(sys.A * x) > 0.0);
    CHECK(x.dot(sys.M * x) > 0.0);
  }
  for (Index t = 0; t < sys.num_elements(); ++t) CHECK(SparseMatrix(sys.D.row(t)).sum() == 3.0);
  const Vector patch = SparseMatrix(sys.D.transpose()) * sys.elem_measure;
  CHECK((patch - sys.patch_measure).lpNorm<Eigen::Infinity>() < 1e-15);
  CHECK((sys.basis_integral - sys.patch_measure / 3.0).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(sys.domain_measure() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stiffness energy matches per-element gradients") {
  const FemSystem sys = assemble(build_structured_mesh(5), zero_load);
  std::mt19937_64 gen(2);
  const Vector u = testing::random_vector(sys.num_nodes(), gen);
  const Vector v = testing::random_vector(sys.num_nodes(), gen);
  double energy = 0.0;
  for (Index t = 0; t < sys.num_elements(); ++t) {
    const auto& tri = sys.mesh.triangles[static_cast<std::size_t>(t)];
    const Point2& a = sys.mesh.nodes[static_cast<std::size_t>(tri[0])];
    const Point2& b = sys.mesh.nodes[static_cast<std::size_t>(tri[1])];
    const Point2& c = sys.mesh.nodes[static_cast<std::size_t>(tri[2])];
    // gradient of the linear interpolant from the 2x2 system [b-a; c-a] g = [f_b - f_a; f_c - f_a]
    auto grad = [&](const Vector& f) {
      Eigen::Matrix2d J;
      J << b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y;
      const Eigen::Vector2d rhs(f[tri[1]] - f[tri[0]], f[tri[2]] - f[tri[0]]);
      return Eigen::Vector2d(J.fullPivLu().solve(rhs));
    };
    energy += sys.mesh.signed_area(t) * grad(u).dot(grad(v));
  }
  CHECK(u.dot(sys.A_full * v) == doctest::Approx(energy).epsilon(1e-12));
}

TEST_CASE("load vector") {
  const FemSystem zero = assemble(build_structured_mesh(4), zero_load);
  CHECK(zero.b_full.isZero());
  const FemSystem one = assemble(build_structured_mesh(4), [](double, double) { return 1.0; });
  CHECK((one.b_full - one.basis_integral).lpNorm<Eigen::Infinity>() < 1e-15);
  // quadratic load is integrated exactly against P1 basis functions summed to one
  const FemSystem quad = assemble(build_structured_mesh(4), [](double x, double y) { return x * x + x * y; });
  CHECK(quad.b_full.sum() == doctest::Approx(1.0 / 3.0 + 0.25).epsilon(1e-13));
}

TEST_CASE("w_of and the lumped l1 identity") {
  const FemSystem sys = assemble(build_structured_mesh(4), zero_load);
  CHECK(w_of(Vector::Zero(sys.num_nodes()), sys).isZero());
  Vector e = Vector::Zero(sys.num_nodes());
  const Index node = 2 * 5 + 2;
  e[node] = 1.0;
  const Vector w = w_of(e, sys);
  for (Index t = 0; t < sys.num_elements(); ++t) {
    const auto& tri = sys.mesh.triangles[static_cast<std::size_t>(t)];
    const bool in_patch = tri[0] == node || tri[1] == node || tri[2] == node;
    CHECK(w[t] == (in_patch ? 1.0 : 0.0));
  }
  CHECK(support_measure(e, sys) == doctest::Approx(sys.patch_measure[node]));

  std::mt19937_64 gen(4);
  for (int n : {4, 8, 16}) {
    const FemSystem s = assemble(build_structured_mesh(n), zero_load);
    for (int k = 0; k < 100; ++k) {
      const Vector u = testing::random_vector(s.num_nodes(), gen);
      const double lhs = lumped_l1(u, s);
      const double rhs = weighted_l1(w_of(u, s), s.element_space()) / 3.0;
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
    }
  }
}

TEST_CASE("functions supported on a small patch set have zero gap") {
  const FemSystem sys = assemble(build_structured_mesh(8), zero_load);
  Vector u = Vector::Zero(sys.num_nodes());
  u[3 * 9 + 3] = 2.0;
  u[3 * 9 + 4] = -1.0;
  const Vector w = w_of(u, sys);
  const double K = weighted_l0(w, sys.element_space());
  CHECK(reformulation_gap(w, sys.element_space(), K).gap == 0.0);
  CHECK(reformulation_gap(w, sys.element_space(), K * 0.9).gap > 0.0);
}

TEST_CASE("expand and restrict") {
  const FemSystem sys = assemble(build_structured_mesh(3), zero_load);
  const Vector d{{1.0, 2.0, 3.0, 4.0}};
  const Vector full = sys.expand(d);
  CHECK(full.size() == 16);
  CHECK(sys.restrict(full) == d);
  for (Index v : sys.mesh.boundary_nodes) CHECK(full[v] == 0.0);
  CHECK_THROWS_AS(sys.expand(Vector::Zero(3)), DimensionMismatch);
}
