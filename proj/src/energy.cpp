#include "homog/energy.hpp"

#include <cmath>
#include <cstring>

#include "homog/util.hpp"

namespace homog {

const char* bc_name(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::kDirichletZero: return "dirichlet_zero";
    case BoundaryCondition::kDirichletAffine: return "dirichlet_affine";
    case BoundaryCondition::kPeriodic: return "periodic";
  }
  throw ParameterError("unknown boundary condition");
}

BoundaryCondition bc_from_name(const std::string& name) {
  if (name == "dirichlet_zero") return BoundaryCondition::kDirichletZero;
  if (name == "dirichlet_affine") return BoundaryCondition::kDirichletAffine;
  if (name == "periodic") return BoundaryCondition::kPeriodic;
  throw ParameterError("unknown boundary condition: " + name);
}

Vec AffineMap::apply(const Pt& x, int d) const {
  Vec out(xi.rows());
  for (int i = 0; i < xi.rows(); ++i) {
    double v = b.size() > 0 ? b[i] : 0.0;
    for (int j = 0; j < d; ++j) v += xi(i, j) * x[static_cast<size_t>(j)];
    out[i] = v;
  }
  return out;
}

std::vector<double> DofMap::gather(const DiscreteField& u) const {
  std::vector<double> x(static_cast<size_t>(dof_count()));
  const auto n_nodes = static_cast<std::int64_t>(rep.size());
  for (std::int64_t node = 0; node < n_nodes; ++node) {
    if (rep[static_cast<size_t>(node)] != node) continue;
    const std::int64_t slot = node_dof[static_cast<size_t>(node)];
    if (slot < 0) continue;
    for (int c = 0; c < m; ++c)
      x[static_cast<size_t>(slot * m + c)] = u.at(node, c);
  }
  return x;
}

void DofMap::scatter(const std::vector<double>& x, DiscreteField& u) const {
  const auto n_nodes = static_cast<std::int64_t>(rep.size());
  for (std::int64_t node = 0; node < n_nodes; ++node) {
    if (rep[static_cast<size_t>(node)] != node) continue;
    if (pinned[static_cast<size_t>(node)]) {
      for (int c = 0; c < m; ++c)
        u.at(node, c) = pinned_values[static_cast<size_t>(node * m + c)];
    } else {
      const std::int64_t slot = node_dof[static_cast<size_t>(node)];
      for (int c = 0; c < m; ++c)
        u.at(node, c) = x[static_cast<size_t>(slot * m + c)];
    }
  }
  for (std::int64_t node = 0; node < n_nodes; ++node) {
    const std::int64_t r = rep[static_cast<size_t>(node)];
    if (r == node) continue;
    for (int c = 0; c < m; ++c) u.at(node, c) = u.at(r, c);
  }
}

std::vector<double> DofMap::fold(const Mesh& mesh,
                                 const std::vector<double>& node_grad) const {
  std::vector<double> acc(static_cast<size_t>(mesh.n_nodes()) *
                              static_cast<size_t>(m),
                          0.0);
  for (std::int64_t node = 0; node < mesh.n_nodes(); ++node) {
    const std::int64_t r = rep[static_cast<size_t>(node)];
    for (int c = 0; c < m; ++c)
      acc[static_cast<size_t>(r * m + c)] +=
          node_grad[static_cast<size_t>(node * m + c)];
  }
  std::vector<double> g(static_cast<size_t>(dof_count()), 0.0);
  for (std::int64_t node = 0; node < mesh.n_nodes(); ++node) {
    if (rep[static_cast<size_t>(node)] != node) continue;
    const std::int64_t slot = node_dof[static_cast<size_t>(node)];
    if (slot < 0) continue;
    for (int c = 0; c < m; ++c)
      g[static_cast<size_t>(slot * m + c)] =
          acc[static_cast<size_t>(node * m + c)];
  }
  return g;
}

namespace {

DofMap finalize_dofs(DofMap dofs) {
  const auto n_nodes = static_cast<std::int64_t>(dofs.rep.size());
  dofs.node_dof.assign(static_cast<size_t>(n_nodes), -1);
  std::int64_t next = 0;
  for (std::int64_t node = 0; node < n_nodes; ++node) {
    if (dofs.rep[static_cast<size_t>(node)] != node) continue;
    if (dofs.pinned[static_cast<size_t>(node)]) continue;
    dofs.node_dof[static_cast<size_t>(node)] = next++;
  }
  dofs.n_free = next;
  return dofs;
}

}  // namespace

DofMap make_dirichlet_dofmap(const Mesh& mesh, int m, const AffineMap& g) {
  if (g.xi.rows() != m || g.xi.cols() != mesh.d())
    throw ParameterError("boundary datum shape mismatch");
  DofMap dofs;
  dofs.m = m;
  const std::int64_t n = mesh.n_nodes();
  dofs.rep.resize(static_cast<size_t>(n));
  dofs.pinned.assign(static_cast<size_t>(n), 0);
  dofs.pinned_values.assign(static_cast<size_t>(n) * static_cast<size_t>(m),
                            0.0);
  for (std::int64_t node = 0; node < n; ++node) {
    dofs.rep[static_cast<size_t>(node)] = node;
    if (!mesh.node_on_boundary(node)) continue;
    dofs.pinned[static_cast<size_t>(node)] = 1;
    const Vec gv = g.apply(mesh.node_coord(node), mesh.d());
    for (int c = 0; c < m; ++c)
      dofs.pinned_values[static_cast<size_t>(node * m + c)] = gv[c];
  }
  return finalize_dofs(std::move(dofs));
}

DofMap make_dirichlet_zero_dofmap(const Mesh& mesh, int m) {
  AffineMap g;
  g.xi = Mat(m, mesh.d());
  g.b = Vec(m);
  return make_dirichlet_dofmap(mesh, m, g);
}

DofMap make_periodic_dofmap(const Mesh& mesh, int m) {
  DofMap dofs;
  dofs.m = m;
  const std::int64_t n = mesh.n_nodes();
  dofs.rep.resize(static_cast<size_t>(n));
  dofs.pinned.assign(static_cast<size_t>(n), 0);
  dofs.pinned_values.assign(static_cast<size_t>(n) * static_cast<size_t>(m),
                            0.0);
  for (std::int64_t node = 0; node < n; ++node) {
    auto idx = mesh.node_multi_index(node);
    for (int ax = 0; ax < mesh.d(); ++ax)
      if (idx[static_cast<size_t>(ax)] == mesh.cells_per_axis()[static_cast<size_t>(ax)])
        idx[static_cast<size_t>(ax)] = 0;
    dofs.rep[static_cast<size_t>(node)] = mesh.node_id(idx);
  }
  dofs.pinned[0] = 1;  // fixes the additive constant
  return finalize_dofs(std::move(dofs));
}

EnergyProblem make_problem(const Mesh& mesh, const EnergyDensity& density,
                           const FieldRealization* field, const Mat& xi_offset,
                           double eps, DofMap dofs, std::vector<double> force,
                           int threads) {
  if (!(eps > 0.0)) throw ParameterError("eps must be positive");
  if (xi_offset.rows() != dofs.m || xi_offset.cols() != mesh.d())
    throw ParameterError("xi offset shape mismatch");
  EnergyProblem prob;
  prob.mesh = &mesh;
  prob.density = &density;
  prob.xi_offset = xi_offset;
  prob.dofs = std::move(dofs);
  prob.threads = threads;

  prob.elem_states.resize(static_cast<size_t>(mesh.n_elements()));
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
    if (field) {
      Pt x = mesh.element_barycenter(e);
      for (int ax = 0; ax < mesh.d(); ++ax)
        x[static_cast<size_t>(ax)] /= eps;
      prob.elem_states[static_cast<size_t>(e)] = field->state_at(x);
    } else {
      prob.elem_states[static_cast<size_t>(e)] = MaterialState{};
    }
  }

  if (!force.empty()) {
    if (force.size() != static_cast<size_t>(mesh.n_nodes()) *
                            static_cast<size_t>(prob.dofs.m))
      throw ParameterError("force vector size mismatch");
    prob.force = std::move(force);
    prob.lumped_weights.assign(static_cast<size_t>(mesh.n_nodes()), 0.0);
    const double share = mesh.element_volume() / (mesh.d() + 1);
    std::array<std::int64_t, 4> nodes{};
    for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
      mesh.element_nodes(e, nodes);
      for (int k = 0; k <= mesh.d(); ++k)
        prob.lumped_weights[static_cast<size_t>(nodes[static_cast<size_t>(k)])] +=
            share;
    }
  }
  return prob;
}

double assemble_bulk_energy(const EnergyProblem& problem,
                            const DiscreteField& u) {
  const Mesh& mesh = *problem.mesh;
  const double vol = mesh.element_volume();
  return chunked_sum(
      mesh.n_elements(),
      [&](std::int64_t e) {
        Mat g = element_gradient(mesh, u, e);
        g += problem.xi_offset;
        return vol * problem.density->value(
                         problem.elem_states[static_cast<size_t>(e)], g);
      },
      problem.threads);
}

double assemble_force_pairing(const EnergyProblem& problem,
                              const DiscreteField& u) {
  if (problem.force.empty()) return 0.0;
  const Mesh& mesh = *problem.mesh;
  const int m = problem.m();
  return chunked_sum(
      mesh.n_nodes(),
      [&](std::int64_t node) {
        double s = 0.0;
        for (int c = 0; c < m; ++c)
          s += problem.force[static_cast<size_t>(node * m + c)] *
               u.at(node, c);
        return problem.lumped_weights[static_cast<size_t>(node)] * s;
      },
      problem.threads);
}

double assemble_energy(const EnergyProblem& problem, const DiscreteField& u) {
  return assemble_bulk_energy(problem, u) - assemble_force_pairing(problem, u);
}

std::vector<double> assemble_energy_gradient(const EnergyProblem& problem,
                                             const DiscreteField& u) {
  const Mesh& mesh = *problem.mesh;
  const int m = problem.m();
  const int d = mesh.d();
  const double vol = mesh.element_volume();
  const double inv_h = 1.0 / mesh.h();
  std::vector<double> node_grad(
      static_cast<size_t>(mesh.n_nodes()) * static_cast<size_t>(m), 0.0);

  std::array<std::int64_t, 4> nodes{};
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
    Mat g = element_gradient(mesh, u, e);
    g += problem.xi_offset;
    Mat dW = problem.density->deriv(problem.elem_states[static_cast<size_t>(e)],
                                    g);
    mesh.element_nodes(e, nodes);
    const auto& perm = mesh.element_perm(e);
    for (int k = 0; k <= d; ++k) {
      const std::int64_t node = nodes[static_cast<size_t>(k)];
      for (int c = 0; c < m; ++c) {
        double val = 0.0;
        if (k >= 1) val += dW(c, perm[static_cast<size_t>(k - 1)]);
        if (k < d) val -= dW(c, perm[static_cast<size_t>(k)]);
        node_grad[static_cast<size_t>(node * m + c)] += vol * inv_h * val;
      }
    }
  }

  if (!problem.force.empty()) {
    for (std::int64_t node = 0; node < mesh.n_nodes(); ++node)
      for (int c = 0; c < m; ++c)
        node_grad[static_cast<size_t>(node * m + c)] -=
            problem.lumped_weights[static_cast<size_t>(node)] *
            problem.force[static_cast<size_t>(node * m + c)];
  }

  for (std::int64_t node = 0; node < mesh.n_nodes(); ++node) {
    const std::int64_t r = problem.dofs.rep[static_cast<size_t>(node)];
    if (!problem.dofs.pinned[static_cast<size_t>(r)]) continue;
    for (int c = 0; c < m; ++c)
      node_grad[static_cast<size_t>(node * m + c)] = 0.0;
  }
  return node_grad;
}

DiscreteField constrained_field(const EnergyProblem& problem) {
  DiscreteField u(*problem.mesh, problem.m());
  std::vector<double> zero(static_cast<size_t>(problem.dofs.dof_count()), 0.0);
  problem.dofs.scatter(zero, u);
  return u;
}

}  // namespace homog
