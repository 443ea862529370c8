#include "fmmbem/bem/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "fmmbem/errors.hpp"

namespace fmmbem::bem {

namespace {

constexpr double kInv4Pi = 1.0 / (4.0 * std::numbers::pi);

bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

void check_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw InputError(std::string(what) + ": expected " + std::to_string(want) + " values, got " + std::to_string(got));
}

// d/dn_x G(x, y) = -n . (x - y) / (4 pi |x - y|^3)
double dGdn(const Vec3& x, const Vec3& n, const Vec3& y) {
  const Vec3 d = x - y;
  const double r = norm(d);
  return -dot(n, d) * kInv4Pi / (r * r * r);
}

}  // namespace

double polarization_factor(const geom::DielectricModel& eps) {
  return 2.0 * (eps.eps_out - eps.eps_in) / (eps.eps_in + eps.eps_out);
}

double eps_hat(const geom::DielectricModel& eps) { return 1.0 - eps.eps_in / eps.eps_out; }

std::vector<double> self_terms(const geom::PanelSet& panels, SelfTerm rule) {
  std::vector<double> d(panels.size(), 0.0);
  if (rule == SelfTerm::flat) return d;
  if (panels.mean_curvature.size() != panels.size())
    throw InputError("curvature self-term needs a mean-curvature estimate for every panel");
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = -0.25 * panels.mean_curvature[i] * std::sqrt(panels.area[i] / std::numbers::pi);
  return d;
}

void check_collocation(const geom::PanelSet& panels, std::span<const geom::PointCharge> charges) {
  std::vector<std::uint32_t> order(panels.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto& c = panels.centroid;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return lex_less(c[a], c[b]) || (c[a] == c[b] && a < b);
  });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (c[order[k]] == c[order[k - 1]])
      throw GeometryError("panels " + std::to_string(order[k - 1]) + " and " + std::to_string(order[k]) +
                          " have the same centroid");
  }
  for (std::size_t q = 0; q < charges.size(); ++q) {
    const Vec3& x = charges[q].position;
    const auto it = std::lower_bound(order.begin(), order.end(), x,
                                     [&](std::uint32_t a, const Vec3& v) { return lex_less(c[a], v); });
    if (it != order.end() && c[*it] == x)
      throw GeometryError("charge " + std::to_string(q) + " sits on the centroid of panel " + std::to_string(*it));
  }
}

struct OperatorContext::Cache {
  std::optional<fmm::Evaluator> panels;          // K'
  std::optional<fmm::Evaluator> charge_to_panel;  // B
  std::optional<fmm::Evaluator> panel_to_charge;  // C
};

OperatorContext::OperatorContext(const geom::MolecularSystem& system, const OperatorOptions& options)
    : options_(options), eps_(system.dielectric), cache_(std::make_unique<Cache>()) {
  eps_.validate();
  options_.fmm.validate();
  const auto& p = system.panels;
  if (p.centroid.size() != p.size() || p.normal.size() != p.size())
    throw InputError("panel set has inconsistent array lengths");
  check_collocation(p, system.charges);
  f_ = polarization_factor(eps_);
  centroids_ = p.centroid;
  normals_ = p.normal;
  areas_ = p.area;
  self_ = self_terms(p, options_.self_term);
  for (const auto& q : system.charges) {
    charge_positions_.push_back(q.position);
    charge_values_.push_back(q.charge);
  }
}

OperatorContext::~OperatorContext() = default;
OperatorContext::OperatorContext(OperatorContext&&) noexcept = default;
OperatorContext& OperatorContext::operator=(OperatorContext&&) noexcept = default;

std::size_t OperatorContext::num_panels() const { return centroids_.size(); }
std::size_t OperatorContext::num_charges() const { return charge_positions_.size(); }

void OperatorContext::record(const fmm::FieldResult& r) const {
  timings_.upward += r.timings.upward;
  timings_.m2l += r.timings.m2l;
  timings_.p2p += r.timings.p2p;
  timings_.total += r.timings.total;
  ++evaluations_;
}

std::vector<double> OperatorContext::apply_B(std::span<const double> q) const {
  if (q.empty()) q = charge_values_;
  check_length(q.size(), num_charges(), "apply_B charges");
  if (q.empty()) return std::vector<double>(num_panels(), 0.0);
  const fmm::TargetSet targets{centroids_, normals_};
  fmm::FieldResult r;
  if (!options_.use_fmm) {
    r = fmm::direct_evaluate({charge_positions_, q}, targets, false, options_.fmm.threads);
  } else {
    if (!cache_->charge_to_panel) {
      cache_->charge_to_panel.emplace(charge_positions_, targets, options_.fmm);
      timings_.tree += cache_->charge_to_panel->setup_seconds();
      timings_.total += cache_->charge_to_panel->setup_seconds();
    }
    r = cache_->charge_to_panel->apply(q);
  }
  record(r);
  std::vector<double> en(num_panels());
  for (std::size_t i = 0; i < en.size(); ++i) en[i] = r.normal_derivative[i] / eps_.eps_in;
  return en;
}

std::vector<double> OperatorContext::apply_Kprime(std::span<const double> sigma) const {
  check_length(sigma.size(), num_panels(), "apply_Kprime density");
  std::vector<double> w(sigma.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = areas_[j] * sigma[j];
  fmm::FieldResult r;
  if (!options_.use_fmm) {
    // Centroids are distinct (checked on construction), so the only
    // zero-distance pairs skipped are the self pairs.
    r = fmm::direct_evaluate({centroids_, w}, {centroids_, normals_}, true, options_.fmm.threads);
  } else {
    if (!cache_->panels) {
      cache_->panels.emplace(fmm::Evaluator::shared(centroids_, normals_, options_.fmm));
      timings_.tree += cache_->panels->setup_seconds();
      timings_.total += cache_->panels->setup_seconds();
    }
    r = cache_->panels->apply(w);
  }
  record(r);
  std::vector<double> out(num_panels());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.normal_derivative[i] + self_[i] * sigma[i];
  return out;
}

std::vector<double> OperatorContext::apply_A(std::span<const double> sigma) const {
  auto k = apply_Kprime(sigma);
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = sigma[i] - f_ * k[i];
  return k;
}

std::vector<double> OperatorContext::apply_C(std::span<const double> sigma) const {
  check_length(sigma.size(), num_panels(), "apply_C density");
  if (num_charges() == 0) return {};
  std::vector<double> w(sigma.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = areas_[j] * sigma[j];
  const fmm::TargetSet targets{charge_positions_, {}};
  fmm::FieldResult r;
  if (!options_.use_fmm) {
    r = fmm::direct_evaluate({centroids_, w}, targets, false, options_.fmm.threads);
  } else {
    if (!cache_->panel_to_charge) {
      cache_->panel_to_charge.emplace(centroids_, targets, options_.fmm);
      timings_.tree += cache_->panel_to_charge->setup_seconds();
      timings_.total += cache_->panel_to_charge->setup_seconds();
    }
    r = cache_->panel_to_charge->apply(w);
  }
  record(r);
  return r.potential;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  check_length(x.size(), cols, "dense multiply");
  std::vector<double> y(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += data[i * cols + j] * x[j];
    y[i] = s;
  }
  return y;
}

DenseMatrix dense_B(const geom::PanelSet& panels, std::span<const geom::PointCharge> charges,
                    const geom::DielectricModel& eps) {
  DenseMatrix m{panels.size(), charges.size(), std::vector<double>(panels.size() * charges.size())};
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t k = 0; k < m.cols; ++k)
      m.data[i * m.cols + k] = dGdn(panels.centroid[i], panels.normal[i], charges[k].position) / eps.eps_in;
  }
  return m;
}

DenseMatrix dense_Kprime(const geom::PanelSet& panels, SelfTerm rule) {
  const std::size_t n = panels.size();
  DenseMatrix m{n, n, std::vector<double>(n * n)};
  const auto diag = self_terms(panels, rule);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      m.data[i * n + j] =
          i == j ? diag[i] : panels.area[j] * dGdn(panels.centroid[i], panels.normal[i], panels.centroid[j]);
    }
  }
  return m;
}

DenseMatrix dense_A(const geom::PanelSet& panels, const geom::DielectricModel& eps, SelfTerm rule) {
  DenseMatrix m = dense_Kprime(panels, rule);
  const double f = polarization_factor(eps);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) m.data[i * m.cols + j] = (i == j ? 1.0 : 0.0) - f * m(i, j);
  }
  return m;
}

DenseMatrix dense_C(const geom::PanelSet& panels, std::span<const geom::PointCharge> charges) {
  DenseMatrix m{charges.size(), panels.size(), std::vector<double>(charges.size() * panels.size())};
  for (std::size_t k = 0; k < m.rows; ++k) {
    for (std::size_t j = 0; j < m.cols; ++j)
      m.data[k * m.cols + j] = panels.area[j] * kInv4Pi / norm(charges[k].position - panels.centroid[j]);
  }
  return m;
}

}  // namespace fmmbem::bem
