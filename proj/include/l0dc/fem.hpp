#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "l0dc/measure_norms.hpp"
#include "l0dc/types.hpp"

namespace l0dc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

using Triangle = std::array<Index, 3>;

/// Conforming triangulation with counter-clockwise elements.
struct TriMesh {
  std::vector<Point2> nodes;
  std::vector<Triangle> triangles;
  std::vector<Index> boundary_nodes;  // ascending
  double h_target = 0.0;

  Index num_nodes() const { return static_cast<Index>(nodes.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles.size()); }

  /// Signed area of triangle t (positive for counter-clockwise vertex order).
  double signed_area(Index t) const;
  /// Longest edge over all triangles.
  double max_diameter() const;
};

/// Uniform n x n grid on the unit square; each cell is cut along its
/// lower-left to upper-right diagonal.
TriMesh build_structured_mesh(int n);

/// Checks orientation, index ranges, repeated vertices and dangling nodes, and
/// recomputes boundary_nodes from edges that belong to exactly one triangle.
void finalize_mesh(TriMesh& mesh);

/// Plain-text mesh format:
///   nodes N
///   x y            (N lines)
///   triangles M
///   i j k          (M lines, 0-based)
TriMesh read_mesh(std::istream& in);
TriMesh import_mesh(const std::filesystem::path& path);
void write_mesh(std::ostream& out, const TriMesh& mesh);
void export_mesh(const std::filesystem::path& path, const TriMesh& mesh);

/// Nodal field format: `field N` followed by N values in node order.
Vector read_field(std::istream& in);
Vector import_field(const std::filesystem::path& path);
void write_field(std::ostream& out, const Vector& values);
void export_field(const std::filesystem::path& path, const Vector& values);

using ScalarField = std::function<double(double, double)>;

/// Assembled P1 system. Matrices A, M and the load b live on the free
/// (interior) degrees of freedom; everything indexed by node or element covers
/// the full mesh.
struct FemSystem {
  TriMesh mesh;

  SparseMatrix A;       // stiffness, free x free
  SparseMatrix M;       // mass, free x free
  Vector b;             // load, free
  SparseMatrix A_full;  // stiffness before Dirichlet elimination
  SparseMatrix M_full;  // mass before Dirichlet elimination
  Vector b_full;

  SparseMatrix D;          // element x node incidence, three ones per row
  Vector elem_measure;     // mu(T_i)
  Vector patch_measure;    // mu of the union of elements around node j
  Vector basis_integral;   // integral of phi_j

  std::vector<Index> free_nodes;   // dof -> node
  std::vector<Index> dof_of_node;  // node -> dof, -1 on the boundary

  Index num_nodes() const { return mesh.num_nodes(); }
  Index num_elements() const { return mesh.num_triangles(); }
  Index num_dofs() const { return static_cast<Index>(free_nodes.size()); }
  double domain_measure() const { return elem_measure.sum(); }

  /// Zero-extends a dof vector to all nodes.
  Vector expand(const Vector& dofs) const;
  /// Drops boundary entries of a nodal vector.
  Vector restrict(const Vector& nodal) const;
  /// Restriction of a node-indexed quantity (e.g. patch_measure) to the dofs.
  Vector dof_values(const Vector& nodal) const { return restrict(nodal); }

  /// The elements as atoms weighted by their area.
  DiscreteMeasureSpace element_space() const { return DiscreteMeasureSpace(elem_measure); }

  /// Nodal interpolant of a scalar field.
  Vector interpolate(const ScalarField& f) const;
};

/// Assembles stiffness, mass, load (edge-midpoint quadrature), incidence and
/// measure vectors. Boundary nodes are eliminated as homogeneous Dirichlet dofs.
FemSystem assemble(const TriMesh& mesh, const ScalarField& load);

/// w_u = D |u| for a nodal vector u.
Vector w_of(const Vector& u_nodal, const FemSystem& system);

/// Lumped L1 norm sum_j |u_j| * integral(phi_j).
double lumped_l1(const Vector& u_nodal, const FemSystem& system);

/// Measure of the support of the P1 function with nodal values u.
double support_measure(const Vector& u_nodal, const FemSystem& system,
                       double zero_threshold = kZeroThreshold);

}  // namespace l0dc
