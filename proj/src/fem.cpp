#include "l0dc/fem.hpp"

#include <cmath>

namespace l0dc {

namespace {

SparseMatrix principal_block(const SparseMatrix& full, const std::vector<Index>& dof_of_node,
                             Index n_dofs) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(full.nonZeros()));
  for (Index col = 0; col < full.outerSize(); ++col) {
    const Index dc = dof_of_node[static_cast<std::size_t>(col)];
    if (dc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
      const Index dr = dof_of_node[static_cast<std::size_t>(it.row())];
      if (dr >= 0) trips.emplace_back(dr, dc, it.value());
    }
  }
  SparseMatrix out(n_dofs, n_dofs);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

Vector FemSystem::expand(const Vector& dofs) const {
  require_size(dofs.size(), num_dofs(), "dof vector");
  Vector out = Vector::Zero(num_nodes());
  for (Index d = 0; d < num_dofs(); ++d) out[free_nodes[static_cast<std::size_t>(d)]] = dofs[d];
  return out;
}

Vector FemSystem::restrict(const Vector& nodal) const {
  require_size(nodal.size(), num_nodes(), "nodal vector");
  Vector out(num_dofs());
  for (Index d = 0; d < num_dofs(); ++d) out[d] = nodal[free_nodes[static_cast<std::size_t>(d)]];
  return out;
}

Vector FemSystem::interpolate(const ScalarField& f) const {
  Vector out(num_nodes());
  for (Index v = 0; v < num_nodes(); ++v) {
    const Point2& p = mesh.nodes[static_cast<std::size_t>(v)];
    out[v] = f(p.x, p.y);
  }
  return out;
}

FemSystem assemble(const TriMesh& mesh, const ScalarField& load) {
  FemSystem sys;
  sys.mesh = mesh;
  const Index n_nodes = mesh.num_nodes();
  const Index n_elem = mesh.num_triangles();

  sys.elem_measure.resize(n_elem);
  sys.patch_measure = Vector::Zero(n_nodes);
  sys.b_full = Vector::Zero(n_nodes);

  std::vector<Triplet> stiff, mass, incidence;
  stiff.reserve(static_cast<std::size_t>(9 * n_elem));
  mass.reserve(static_cast<std::size_t>(9 * n_elem));
  incidence.reserve(static_cast<std::size_t>(3 * n_elem));

  for (Index t = 0; t < n_elem; ++t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const double area = mesh.signed_area(t);
    if (!(area > 0.0)) throw MeshError("element " + std::to_string(t) + " has non-positive area");
    sys.elem_measure[t] = area;

    std::array<Point2, 3> p;
    for (int a = 0; a < 3; ++a) p[a] = mesh.nodes[static_cast<std::size_t>(tri[a])];

    // grad phi_a = (y_b - y_c, x_c - x_b) / (2 area) for (a, b, c) cyclic
    std::array<double, 3> gx{}, gy{};
    for (int a = 0; a < 3; ++a) {
      const Point2& pb = p[(a + 1) % 3];
      const Point2& pc = p[(a + 2) % 3];
      gx[a] = (pb.y - pc.y) / (2.0 * area);
      gy[a] = (pc.x - pb.x) / (2.0 * area);
    }

    // g at the three edge midpoints; phi_a is 1/2 on the two edges through a.
    std::array<double, 3> g_mid{};  // g_mid[e] on edge (e, e+1)
    for (int e = 0; e < 3; ++e) {
      const Point2& q0 = p[e];
      const Point2& q1 = p[(e + 1) % 3];
      g_mid[e] = load(0.5 * (q0.x + q1.x), 0.5 * (q0.y + q1.y));
    }

    for (int a = 0; a < 3; ++a) {
      const Index ia = tri[a];
      incidence.emplace_back(t, ia, 1.0);
      sys.patch_measure[ia] += area;
      const double edges_through_a = g_mid[a] + g_mid[(a + 2) % 3];
      sys.b_full[ia] += area / 3.0 * 0.5 * edges_through_a;
      for (int c = 0; c < 3; ++c) {
        const Index ic = tri[c];
        stiff.emplace_back(ia, ic, area * (gx[a] * gx[c] + gy[a] * gy[c]));
        mass.emplace_back(ia, ic, a == c ? area / 6.0 : area / 12.0);
      }
    }
  }

  sys.A_full.resize(n_nodes, n_nodes);
  sys.A_full.setFromTriplets(stiff.begin(), stiff.end());
  sys.M_full.resize(n_nodes, n_nodes);
  sys.M_full.setFromTriplets(mass.begin(), mass.end());
  sys.D.resize(n_elem, n_nodes);
  sys.D.setFromTriplets(incidence.begin(), incidence.end());
  sys.basis_integral = sys.patch_measure / 3.0;

  std::vector<bool> boundary(static_cast<std::size_t>(n_nodes), false);
  for (Index v : mesh.boundary_nodes) boundary[static_cast<std::size_t>(v)] = true;
  sys.dof_of_node.assign(static_cast<std::size_t>(n_nodes), -1);
  for (Index v = 0; v < n_nodes; ++v) {
    if (!boundary[static_cast<std::size_t>(v)]) {
      sys.dof_of_node[static_cast<std::size_t>(v)] = static_cast<Index>(sys.free_nodes.size());
      sys.free_nodes.push_back(v);
    }
  }
  if (sys.free_nodes.empty()) throw MeshError("mesh has no interior nodes");

  sys.A = principal_block(sys.A_full, sys.dof_of_node, sys.num_dofs());
  sys.M = principal_block(sys.M_full, sys.dof_of_node, sys.num_dofs());
  sys.b = sys.restrict(sys.b_full);
  return sys;
}

Vector w_of(const Vector& u_nodal, const FemSystem& system) {
  require_size(u_nodal.size(), system.num_nodes(), "nodal vector");
  return system.D * u_nodal.cwiseAbs();
}

double lumped_l1(const Vector& u_nodal, const FemSystem& system) {
  require_size(u_nodal.size(), system.num_nodes(), "nodal vector");
  return system.basis_integral.dot(u_nodal.cwiseAbs());
}

double support_measure(const Vector& u_nodal, const FemSystem& system, double zero_threshold) {
  return weighted_l0(w_of(u_nodal, system), system.element_space(), zero_threshold);
}

}  // namespace l0dc
