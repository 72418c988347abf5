#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "homog/la.hpp"

namespace homog {

struct Box {
  Pt lo{0, 0, 0};
  Pt hi{0, 0, 0};
  int d = 1;
};

// Structured Kuhn triangulation of a box: the grid has n_per_unit cells per
// unit length and every grid cube splits into d! simplices, one per
// permutation (the path from the cube corner along permuted axes). Nodes and
// elements are implicit; ids are lexicographic.
class Mesh {
 public:
  Mesh(Box box, int n_per_unit);

  int d() const { return box_.d; }
  double h() const { return h_; }
  const Box& box() const { return box_; }
  int n_per_unit() const { return n_per_unit_; }

  std::int64_t n_nodes() const { return n_nodes_; }
  std::int64_t n_elements() const { return n_elements_; }
  std::int64_t n_cubes() const { return n_cubes_; }
  int simplices_per_cube() const { return n_perms_; }

  std::array<std::int64_t, 3> cells_per_axis() const { return ncells_; }

  Pt node_coord(std::int64_t node) const;
  std::array<std::int64_t, 3> node_multi_index(std::int64_t node) const;
  std::int64_t node_id(const std::array<std::int64_t, 3>& idx) const;
  bool node_on_boundary(std::int64_t node) const;

  // Node id whose coordinates equal x (throws if x is off-grid).
  std::int64_t node_at(const Pt& x) const;

  double element_volume() const { return elem_volume_; }

  // Vertex node ids of element e, corner first, then the permutation path.
  void element_nodes(std::int64_t e,
                     std::array<std::int64_t, 4>& nodes) const;
  // Permutation (axis order) of element e.
  const std::array<int, 3>& element_perm(std::int64_t e) const;
  Pt element_barycenter(std::int64_t e) const;

  double total_volume() const;

 private:
  Box box_;
  int n_per_unit_;
  double h_;
  std::array<std::int64_t, 3> ncells_{1, 1, 1};
  std::array<std::int64_t, 3> npts_{1, 1, 1};
  std::int64_t n_nodes_ = 0;
  std::int64_t n_cubes_ = 0;
  std::int64_t n_elements_ = 0;
  int n_perms_ = 1;
  double elem_volume_ = 0.0;
  std::vector<std::array<int, 3>> perms_;
};

Mesh build_mesh(const Box& box, int n_per_unit);

// Nodal m-vector field on a mesh.
struct DiscreteField {
  const Mesh* mesh = nullptr;
  int m = 1;
  std::vector<double> values;  // node-major, m components per node

  DiscreteField() = default;
  DiscreteField(const Mesh& msh, int m_components);

  double& at(std::int64_t node, int comp) {
    return values[static_cast<std::size_t>(node * m + comp)];
  }
  double at(std::int64_t node, int comp) const {
    return values[static_cast<std::size_t>(node * m + comp)];
  }
  Vec node_value(std::int64_t node) const;
};

// Exact gradient of the piecewise-affine interpolant, one m x d matrix per
// element.
std::vector<Mat> gradient(const Mesh& mesh, const DiscreteField& u);

// Gradient on a single element.
Mat element_gradient(const Mesh& mesh, const DiscreteField& u, std::int64_t e);

// Value of the piecewise-affine interpolant at x (x must lie in the box).
Vec interpolate(const DiscreteField& u, const Pt& x);

// Nodal interpolation of a coarse field onto another mesh over the same box.
DiscreteField inject(const DiscreteField& coarse, const Mesh& fine);

// Nodal interpolation onto a mesh over a larger box; nodes outside the
// coarse box get zero.
DiscreteField extend_by_zero(const DiscreteField& coarse, const Mesh& fine);

void write_field_csv(const DiscreteField& u, const std::string& path);
void write_field_binary(const DiscreteField& u, const std::string& path);

}  // namespace homog
