#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "homog/integrand.hpp"
#include "homog/la.hpp"
#include "homog/mesh.hpp"
#include "homog/random_field.hpp"

namespace homog {

// Energy density W(state, gradient) evaluated per element; implementations
// are the integrand families and the tabulated homogenized density.
struct EnergyDensity {
  virtual ~EnergyDensity() = default;
  virtual double value(const MaterialState& s, const Mat& grad) const = 0;
  virtual Mat deriv(const MaterialState& s, const Mat& grad) const = 0;
};

class FamilyDensity final : public EnergyDensity {
 public:
  FamilyDensity(IntegrandSpec spec, double huber_delta = 0.0)
      : spec_(spec), huber_(huber_delta) {
    validate_spec(spec_);
  }
  double value(const MaterialState& s, const Mat& grad) const override {
    return eval(spec_, s, grad, huber_);
  }
  Mat deriv(const MaterialState& s, const Mat& grad) const override {
    return grad_xi(spec_, s, grad, huber_);
  }
  const IntegrandSpec& spec() const { return spec_; }
  double huber_delta() const { return huber_; }

 private:
  IntegrandSpec spec_;
  double huber_;
};

enum class BoundaryCondition { kDirichletZero, kDirichletAffine, kPeriodic };

const char* bc_name(BoundaryCondition bc);
BoundaryCondition bc_from_name(const std::string& name);

// Affine boundary datum g(x) = xi_g x + b.
struct AffineMap {
  Mat xi;
  Vec b;
  Vec apply(const Pt& x, int d) const;
};

// Maps mesh nodes to solver unknowns: periodic identification ties opposite
// faces to one representative, Dirichlet nodes are pinned to their boundary
// values. Dof vectors hold m components per free representative node.
struct DofMap {
  int m = 1;
  std::vector<std::int64_t> rep;        // node -> representative node
  std::vector<std::uint8_t> pinned;     // per node: value is prescribed
  std::vector<double> pinned_values;    // m per node where pinned
  std::vector<std::int64_t> node_dof;   // representative node -> dof slot or -1
  std::int64_t n_free = 0;              // free representative nodes

  std::int64_t dof_count() const { return n_free * m; }
  std::vector<double> gather(const DiscreteField& u) const;
  void scatter(const std::vector<double>& x, DiscreteField& u) const;
  // Fold per-node gradients into dof space (tied nodes accumulate).
  std::vector<double> fold(const Mesh& mesh,
                           const std::vector<double>& node_grad) const;
};

DofMap make_dirichlet_dofmap(const Mesh& mesh, int m, const AffineMap& g);
DofMap make_dirichlet_zero_dofmap(const Mesh& mesh, int m);
// Opposite faces identified; one node pinned to zero to fix the constant.
DofMap make_periodic_dofmap(const Mesh& mesh, int m);

// Discrete functional  u -> sum_e vol_e W(state(bary_e / eps), xi + grad u)
//                            - sum_i w_i f_i . u_i
// with barycenter quadrature and mass-lumped force pairing.
struct EnergyProblem {
  const Mesh* mesh = nullptr;
  const EnergyDensity* density = nullptr;
  Mat xi_offset;
  DofMap dofs;
  std::vector<double> force;  // m per node; empty means no force term
  int threads = 1;

  std::vector<MaterialState> elem_states;  // one per element
  std::vector<double> lumped_weights;      // one per node (only if force set)

  int m() const { return dofs.m; }
};

// Builds the problem, caching per-element states looked up at barycenter/eps
// (throws WindowError if a barycenter leaves the realization window).
// `field` may be null for state-independent densities.
EnergyProblem make_problem(const Mesh& mesh, const EnergyDensity& density,
                           const FieldRealization* field, const Mat& xi_offset,
                           double eps, DofMap dofs,
                           std::vector<double> force = {}, int threads = 1);

double assemble_energy(const EnergyProblem& problem, const DiscreteField& u);

// Raw derivative w.r.t. each nodal value (pinned components zeroed).
std::vector<double> assemble_energy_gradient(const EnergyProblem& problem,
                                             const DiscreteField& u);

// Bulk part only: sum_e vol_e W(s_e, xi + grad u).
double assemble_bulk_energy(const EnergyProblem& problem,
                            const DiscreteField& u);

// Force pairing sum_i w_i f_i . u_i (0 when the problem has no force).
double assemble_force_pairing(const EnergyProblem& problem,
                              const DiscreteField& u);

// Field satisfying the problem's pinned values, zero elsewhere.
DiscreteField constrained_field(const EnergyProblem& problem);

}  // namespace homog
