#include "homog/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace homog {

Mesh::Mesh(Box box, int n_per_unit) : box_(box), n_per_unit_(n_per_unit) {
  if (box_.d < 1 || box_.d > 3) throw ConfigError("mesh dimension must be 1..3");
  if (n_per_unit_ < 1) throw ConfigError("n_per_unit must be >= 1");
  h_ = 1.0 / n_per_unit_;
  n_nodes_ = 1;
  n_cubes_ = 1;
  for (int k = 0; k < box_.d; ++k) {
    const double span = box_.hi[static_cast<std::size_t>(k)] -
                        box_.lo[static_cast<std::size_t>(k)];
    if (!(span > 0.0)) throw ConfigError("mesh box is degenerate");
    const double cells = span * n_per_unit_;
    const auto rounded = static_cast<std::int64_t>(std::llround(cells));
    if (rounded < 1 || std::abs(cells - static_cast<double>(rounded)) > 1e-9)
      throw ConfigError("box spans must be integer multiples of the cell size");
    ncells_[static_cast<std::size_t>(k)] = rounded;
    npts_[static_cast<std::size_t>(k)] = rounded + 1;
    n_nodes_ *= npts_[static_cast<std::size_t>(k)];
    n_cubes_ *= rounded;
  }
  n_perms_ = 1;
  for (int k = 2; k <= box_.d; ++k) n_perms_ *= k;
  n_elements_ = n_cubes_ * n_perms_;
  elem_volume_ = std::pow(h_, box_.d) / n_perms_;

  std::array<int, 3> axes{0, 1, 2};
  perms_.clear();
  std::array<int, 3> p = axes;
  // All permutations of the first d axes, in lexicographic order.
  std::vector<int> head(static_cast<std::size_t>(box_.d));
  std::iota(head.begin(), head.end(), 0);
  do {
    for (int k = 0; k < box_.d; ++k) p[static_cast<std::size_t>(k)] =
        head[static_cast<std::size_t>(k)];
    perms_.push_back(p);
  } while (std::next_permutation(head.begin(), head.end()));
}

Pt Mesh::node_coord(std::int64_t node) const {
  const auto idx = node_multi_index(node);
  Pt x{0, 0, 0};
  for (int k = 0; k < box_.d; ++k)
    x[static_cast<std::size_t>(k)] =
        box_.lo[static_cast<std::size_t>(k)] +
        h_ * static_cast<double>(idx[static_cast<std::size_t>(k)]);
  return x;
}

std::array<std::int64_t, 3> Mesh::node_multi_index(std::int64_t node) const {
  std::array<std::int64_t, 3> idx{0, 0, 0};
  for (int k = box_.d - 1; k >= 0; --k) {
    idx[static_cast<std::size_t>(k)] = node % npts_[static_cast<std::size_t>(k)];
    node /= npts_[static_cast<std::size_t>(k)];
  }
  return idx;
}

std::int64_t Mesh::node_id(const std::array<std::int64_t, 3>& idx) const {
  std::int64_t id = 0;
  for (int k = 0; k < box_.d; ++k)
    id = id * npts_[static_cast<std::size_t>(k)] +
         idx[static_cast<std::size_t>(k)];
  return id;
}

bool Mesh::node_on_boundary(std::int64_t node) const {
  const auto idx = node_multi_index(node);
  for (int k = 0; k < box_.d; ++k) {
    if (idx[static_cast<std::size_t>(k)] == 0 ||
        idx[static_cast<std::size_t>(k)] == ncells_[static_cast<std::size_t>(k)])
      return true;
  }
  return false;
}

std::int64_t Mesh::node_at(const Pt& x) const {
  std::array<std::int64_t, 3> idx{0, 0, 0};
  for (int k = 0; k < box_.d; ++k) {
    const double rel = (x[static_cast<std::size_t>(k)] -
                        box_.lo[static_cast<std::size_t>(k)]) /
                       h_;
    const auto rounded = static_cast<std::int64_t>(std::llround(rel));
    if (std::abs(rel - static_cast<double>(rounded)) > 1e-7 || rounded < 0 ||
        rounded > ncells_[static_cast<std::size_t>(k)])
      throw ConfigError("point is not a grid node of this mesh");
    idx[static_cast<std::size_t>(k)] = rounded;
  }
  return node_id(idx);
}

void Mesh::element_nodes(std::int64_t e,
                         std::array<std::int64_t, 4>& nodes) const {
  const std::int64_t cube = e / n_perms_;
  const auto& perm = perms_[static_cast<std::size_t>(e % n_perms_)];
  std::array<std::int64_t, 3> idx{0, 0, 0};
  std::int64_t rem = cube;
  for (int k = box_.d - 1; k >= 0; --k) {
    idx[static_cast<std::size_t>(k)] = rem % ncells_[static_cast<std::size_t>(k)];
    rem /= ncells_[static_cast<std::size_t>(k)];
  }
  nodes[0] = node_id(idx);
  for (int k = 0; k < box_.d; ++k) {
    idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] += 1;
    nodes[static_cast<std::size_t>(k) + 1] = node_id(idx);
  }
}

const std::array<int, 3>& Mesh::element_perm(std::int64_t e) const {
  return perms_[static_cast<std::size_t>(e % n_perms_)];
}

Pt Mesh::element_barycenter(std::int64_t e) const {
  std::array<std::int64_t, 4> nodes{};
  element_nodes(e, nodes);
  Pt bary{0, 0, 0};
  for (int v = 0; v <= box_.d; ++v) {
    const Pt x = node_coord(nodes[static_cast<std::size_t>(v)]);
    for (int k = 0; k < box_.d; ++k)
      bary[static_cast<std::size_t>(k)] += x[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < box_.d; ++k)
    bary[static_cast<std::size_t>(k)] /= static_cast<double>(box_.d + 1);
  return bary;
}

double Mesh::total_volume() const {
  return elem_volume_ * static_cast<double>(n_elements_);
}

Mesh build_mesh(const Box& box, int n_per_unit) { return Mesh(box, n_per_unit); }

DiscreteField::DiscreteField(const Mesh& msh, int m_components)
    : mesh(&msh), m(m_components) {
  if (m < 1 || m > Vec::kMaxEntries)
    throw ConfigError("field components out of supported range");
  values.assign(static_cast<std::size_t>(msh.n_nodes() * m), 0.0);
}

Vec DiscreteField::node_value(std::int64_t node) const {
  Vec v(m);
  for (int c = 0; c < m; ++c) v[c] = at(node, c);
  return v;
}

Mat element_gradient(const Mesh& mesh, const DiscreteField& u, std::int64_t e) {
  const int d = mesh.d(), m = u.m;
  const double inv_h = 1.0 / mesh.h();
  std::array<std::int64_t, 4> nodes{};
  mesh.element_nodes(e, nodes);
  const auto& perm = mesh.element_perm(e);
  Mat g(m, d);
  for (int k = 0; k < d; ++k) {
    const int col = perm[static_cast<std::size_t>(k)];
    const std::int64_t hi = nodes[static_cast<std::size_t>(k) + 1];
    const std::int64_t lo = nodes[static_cast<std::size_t>(k)];
    for (int c = 0; c < m; ++c)
      g(c, col) = (u.at(hi, c) - u.at(lo, c)) * inv_h;
  }
  return g;
}

std::vector<Mat> gradient(const Mesh& mesh, const DiscreteField& u) {
  if (u.mesh != &mesh) throw ConfigError("field is not on this mesh");
  std::vector<Mat> grads;
  grads.reserve(static_cast<std::size_t>(mesh.n_elements()));
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e)
    grads.push_back(element_gradient(mesh, u, e));
  return grads;
}

Vec interpolate(const DiscreteField& u, const Pt& x) {
  const Mesh& mesh = *u.mesh;
  const int d = mesh.d();
  const double h = mesh.h();
  std::array<std::int64_t, 3> cube{0, 0, 0};
  std::array<double, 3> local{0, 0, 0};
  const auto ncells = mesh.cells_per_axis();
  for (int k = 0; k < d; ++k) {
    const double rel = (x[static_cast<std::size_t>(k)] -
                        mesh.box().lo[static_cast<std::size_t>(k)]) /
                       h;
    auto c = static_cast<std::int64_t>(std::floor(rel));
    c = std::clamp<std::int64_t>(c, 0, ncells[static_cast<std::size_t>(k)] - 1);
    if (rel < -1e-9 ||
        rel > static_cast<double>(ncells[static_cast<std::size_t>(k)]) + 1e-9)
      throw ConfigError("interpolation point outside the mesh box");
    cube[static_cast<std::size_t>(k)] = c;
    local[static_cast<std::size_t>(k)] =
        std::clamp(rel - static_cast<double>(c), 0.0, 1.0);
  }
  // The Kuhn simplex containing the point sorts local coordinates decreasingly.
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.begin() + d, [&](int a, int b) {
    return local[static_cast<std::size_t>(a)] > local[static_cast<std::size_t>(b)];
  });
  // Walk the path corner -> corner + e_{order[0]} -> ... collecting vertex ids.
  std::array<std::int64_t, 3> idx = cube;
  std::array<std::int64_t, 4> nodes{};
  nodes[0] = mesh.node_id(idx);
  for (int k = 0; k < d; ++k) {
    idx[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] += 1;
    nodes[static_cast<std::size_t>(k) + 1] = mesh.node_id(idx);
  }
  Vec v = u.node_value(nodes[0]);
  for (int k = 0; k < d; ++k) {
    const double w = local[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    for (int c = 0; c < u.m; ++c)
      v[c] += w * (u.at(nodes[static_cast<std::size_t>(k) + 1], c) -
                   u.at(nodes[static_cast<std::size_t>(k)], c));
  }
  return v;
}

DiscreteField inject(const DiscreteField& coarse, const Mesh& fine) {
  DiscreteField out(fine, coarse.m);
  for (std::int64_t node = 0; node < fine.n_nodes(); ++node) {
    const Vec v = interpolate(coarse, fine.node_coord(node));
    for (int c = 0; c < coarse.m; ++c) out.at(node, c) = v[c];
  }
  return out;
}

DiscreteField extend_by_zero(const DiscreteField& coarse, const Mesh& fine) {
  const Box& cb = coarse.mesh->box();
  DiscreteField out(fine, coarse.m);
  for (std::int64_t node = 0; node < fine.n_nodes(); ++node) {
    const Pt x = fine.node_coord(node);
    bool inside = true;
    for (int ax = 0; ax < cb.d; ++ax) {
      const auto a = static_cast<std::size_t>(ax);
      if (x[a] < cb.lo[a] - 1e-12 || x[a] > cb.hi[a] + 1e-12) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    const Vec v = interpolate(coarse, x);
    for (int c = 0; c < coarse.m; ++c) out.at(node, c) = v[c];
  }
  return out;
}

void write_field_csv(const DiscreteField& u, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  const Mesh& mesh = *u.mesh;
  out << "node";
  for (int k = 0; k < mesh.d(); ++k) out << ",x" << k;
  for (int c = 0; c < u.m; ++c) out << ",u" << c;
  out << "\n";
  char buf[32];
  for (std::int64_t node = 0; node < mesh.n_nodes(); ++node) {
    out << node;
    const Pt x = mesh.node_coord(node);
    for (int k = 0; k < mesh.d(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", x[static_cast<std::size_t>(k)]);
      out << ',' << buf;
    }
    for (int c = 0; c < u.m; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", u.at(node, c));
      out << ',' << buf;
    }
    out << "\n";
  }
}

void write_field_binary(const DiscreteField& u, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(u.values.data()),
            static_cast<std::streamsize>(u.values.size() * sizeof(double)));
}

}  // namespace homog
