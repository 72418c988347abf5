#include "homog/cutoff.hpp"

#include <algorithm>
#include <cmath>

#include "homog/la.hpp"

namespace homog {

namespace {

double radius_from(const Pt& x, const Pt& center, int d) {
  double s = 0.0;
  for (int a = 0; a < d; ++a) s += (x[a] - center[a]) * (x[a] - center[a]);
  return std::sqrt(s);
}

double bary_value_norm(const Mesh& mesh, const DiscreteField& u,
                       std::int64_t e) {
  std::array<std::int64_t, 4> nodes{};
  mesh.element_nodes(e, nodes);
  double s = 0.0;
  for (int c = 0; c < u.m; ++c) {
    double v = 0.0;
    for (int j = 0; j <= mesh.d(); ++j) v += u.at(nodes[j], c);
    v /= mesh.d() + 1;
    s += v * v;
  }
  return std::sqrt(s);
}

int shell_of(const AnnulusData& data, double r) {
  double lo = (1.0 - data.delta) * data.r_outer;
  if (r < lo || r >= data.r_outer) return -1;
  auto k = static_cast<std::int64_t>((r - lo) / data.shell_width);
  return static_cast<int>(std::clamp<std::int64_t>(k, 0, data.n_shells - 1));
}

void validate_annulus_inputs(const Mesh& mesh,
                             const std::vector<const DiscreteField*>& fields,
                             double r_outer, double delta, double p) {
  if (!(r_outer > 0.0)) throw ParameterError("annulus radius must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw ParameterError("annulus fraction delta must lie in (0, 1)");
  if (!(p >= 1.0)) throw ParameterError("annulus exponent must satisfy p >= 1");
  if (fields.empty()) throw ParameterError("annulus needs at least one field");
  for (const DiscreteField* f : fields)
    if (f == nullptr || f->mesh != &mesh)
      throw ParameterError("annulus fields must live on the given mesh");
}

}  // namespace

AnnulusData collect_annulus(const Mesh& mesh,
                            const std::vector<const DiscreteField*>& fields,
                            const Pt& center, double r_outer, double delta,
                            double p, int n_shells) {
  validate_annulus_inputs(mesh, fields, r_outer, delta, p);
  AnnulusData data;
  data.r_outer = r_outer;
  data.delta = delta;
  data.center = center;
  data.d = mesh.d();
  data.p = p;
  data.n_shells =
      n_shells > 0
          ? n_shells
          : std::max<int>(1, static_cast<int>(std::ceil(delta * r_outer / mesh.h())));
  data.shell_width = delta * r_outer / data.n_shells;

  const int nf = static_cast<int>(fields.size());
  data.grad_p.assign(nf, std::vector<double>(data.n_shells, 0.0));
  data.value_p.assign(nf, std::vector<double>(data.n_shells, 0.0));
  data.grad_total.assign(nf, 0.0);
  data.value_total.assign(nf, 0.0);

  const double vol = mesh.element_volume();
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
    int k = shell_of(data, radius_from(mesh.element_barycenter(e), center,
                                       data.d));
    if (k < 0) continue;
    for (int i = 0; i < nf; ++i) {
      double g = vol * std::pow(element_gradient(mesh, *fields[i], e).norm(), p);
      double v = vol * std::pow(bary_value_norm(mesh, *fields[i], e), p);
      data.grad_p[i][k] += g;
      data.value_p[i][k] += v;
      data.grad_total[i] += g;
      data.value_total[i] += v;
    }
  }
  return data;
}

GoodRadii good_radii(const AnnulusData& data, double p) {
  if (p != data.p)
    throw ParameterError("good_radii exponent differs from the collected one");
  if (data.n_shells < 1) throw ParameterError("annulus has no shells");
  const int nf = static_cast<int>(data.grad_p.size());
  const double big_c = 4.0 * nf;
  const double r = data.r_outer;
  const double denom =
      data.delta * std::pow(1.0 - data.delta, data.d - 1) * std::pow(r, data.d);

  GoodRadii out;
  out.delta_r = data.delta * r;
  out.selected.assign(data.n_shells, 1);
  for (int k = 0; k < data.n_shells; ++k) {
    const double area = data.shell_width * std::pow(data.shell_lo(k), data.d - 1);
    for (int i = 0; i < nf && out.selected[k]; ++i) {
      bool ok_grad =
          data.grad_p[i][k] <= (big_c / denom) * data.grad_total[i] * area;
      bool ok_val =
          data.value_p[i][k] <= (big_c / denom) * data.value_total[i] * area;
      if (!ok_grad || !ok_val) out.selected[k] = 0;
    }
  }
  int count = 0;
  for (auto s : out.selected) count += s;
  out.measure = count * data.shell_width;
  if (out.measure < 0.5 * out.delta_r * (1.0 - 1e-12))
    throw InvariantError("good radii cover less than half the annulus width");
  return out;
}

RadialCutoff build_cutoff(const GoodRadii& good, const AnnulusData& data) {
  if (std::ssize(good.selected) != data.n_shells)
    throw ParameterError("good radii do not match the annulus shells");
  RadialCutoff cut;
  cut.r_outer = data.r_outer;
  cut.delta = data.delta;
  for (int k = 0; k < data.n_shells; ++k) {
    if (!good.selected[k]) continue;
    double lo = data.shell_lo(k);
    double hi = lo + data.shell_width;
    if (!cut.intervals.empty() && cut.intervals.back()[1] >= lo)
      cut.intervals.back()[1] = hi;
    else
      cut.intervals.push_back({lo, hi});
  }
  // Accumulated exactly as eval() does, so the plateau value is 1.0 bitwise.
  cut.u_measure = 0.0;
  for (const auto& iv : cut.intervals) cut.u_measure += iv[1] - iv[0];
  if (cut.lipschitz() > 2.0 / (data.delta * data.r_outer) * (1.0 + 1e-12))
    throw InvariantError("cutoff slope exceeds 2/(delta R)");
  if (cut.eval(data.r_outer) != 0.0)
    throw InvariantError("cutoff does not vanish at the outer radius");
  return cut;
}

double RadialCutoff::eval(double r) const {
  if (u_measure <= 0.0) return 0.0;
  if (r >= r_outer) return 0.0;
  double overlap = 0.0;
  for (const auto& iv : intervals)
    overlap += std::max(0.0, iv[1] - std::max(r, iv[0]));
  return std::min(1.0, overlap / u_measure);
}

double RadialCutoff::slope_mag_at(double r) const {
  for (const auto& iv : intervals)
    if (r >= iv[0] && r < iv[1]) return 1.0 / u_measure;
  return 0.0;
}

ProductBoundReport verify_product_bound(
    const RadialCutoff& cutoff, const Mesh& mesh,
    const std::vector<const DiscreteField*>& fields, const AnnulusData& data,
    double rho) {
  validate_annulus_inputs(mesh, fields, data.r_outer, data.delta, data.p);
  if (!(rho > 0.0)) throw ParameterError("rho must be positive");
  if (std::ssize(fields) != std::ssize(data.grad_total))
    throw ParameterError("field count differs from the collected data");

  const int nf = static_cast<int>(fields.size());
  const double r = data.r_outer;
  const double ann_norm = data.delta * std::pow(r, data.d);

  std::vector<double> max_lhs(nf, 0.0);
  for (std::int64_t e = 0; e < mesh.n_elements(); ++e) {
    double re = radius_from(mesh.element_barycenter(e), data.center, data.d);
    if (shell_of(data, re) < 0) continue;
    double slope = cutoff.slope_mag_at(re);
    if (slope == 0.0) continue;
    for (int i = 0; i < nf; ++i)
      max_lhs[i] =
          std::max(max_lhs[i], slope * bary_value_norm(mesh, *fields[i], e));
  }

  ProductBoundReport rep;
  rep.rho = rho;
  rep.n_fields = nf;
  for (int i = 0; i < nf; ++i) {
    rep.max_lhs = std::max(rep.max_lhs, max_lhs[i]);
    double grad_term = std::pow(data.grad_total[i] / ann_norm, 1.0 / data.p);
    double val_term = std::pow(data.value_total[i] / ann_norm, 1.0 / data.p);
    if (val_term <= 0.0) continue;  // zero field: lhs is zero as well
    double c_i = (max_lhs[i] - (rho / data.delta) * grad_term) *
                 (data.delta * r) / val_term;
    rep.c_rho_n = std::max(rep.c_rho_n, std::max(0.0, c_i));
  }
  return rep;
}

}  // namespace homog
