#include "fmmbem/fmm/expansion.hpp"

#include <cmath>
#include <cstdlib>

#include "fmmbem/errors.hpp"

namespace fmmbem::fmm {

Expansion::Expansion(int order, const Vec3& center, ExpansionKind kind)
    : order_(order), center_(center), kind_(kind), coeffs_(num_coefficients(order)) {
  if (order < 0 || order > kMaxOrder) throw InputError("expansion order must be in [0, 30]");
}

double Expansion::norm() const {
  double s = 0.0;
  for (int n = 0; n <= order_; ++n) {
    for (int m = 0; m <= n; ++m) s += (m == 0 ? 1.0 : 2.0) * std::norm(coeffs_[coeff_index(n, m)]);
  }
  return std::sqrt(s);
}

namespace ops {

namespace {
constexpr double sign(int k) { return (k & 1) ? -1.0 : 1.0; }
}  // namespace

void p2m_accumulate(std::span<const Vec3> positions, std::span<const double> weights, const Vec3& center, int p,
                    std::span<Complex> out) {
  Complex r[num_coefficients(kMaxOrder)];
  const std::size_t nc = num_coefficients(p);
  for (std::size_t j = 0; j < positions.size(); ++j) {
    regular_harmonics(positions[j] - center, p, std::span<Complex>(r, nc));
    const double w = weights[j];
    for (std::size_t i = 0; i < nc; ++i) out[i] += w * std::conj(r[i]);
  }
}

void m2m_accumulate(std::span<const Complex> child, const Vec3& child_center, const Vec3& parent_center, int p,
                    std::span<Complex> out) {
  Complex r[num_coefficients(kMaxOrder)];
  const std::span<const Complex> rs(r, num_coefficients(p));
  regular_harmonics(child_center - parent_center, p, std::span<Complex>(r, num_coefficients(p)));
  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) {
      Complex acc{};
      for (int k = 0; k <= n; ++k) {
        const int j = n - k;
        const int lo = std::max(-k, m - j);
        const int hi = std::min(k, m + j);
        for (int l = lo; l <= hi; ++l) acc += coeff_at(child, k, l) * std::conj(coeff_at(rs, j, m - l));
      }
      out[coeff_index(n, m)] += acc;
    }
  }
}

void m2l_accumulate(std::span<const Complex> multipole, const Vec3& source_center, const Vec3& target_center, int p,
                    std::span<Complex> out) {
  Complex t[num_coefficients(2 * kMaxOrder)];
  const std::size_t nt = num_coefficients(2 * p);
  irregular_harmonics(target_center - source_center, 2 * p, std::span<Complex>(t, nt));
  const std::span<const Complex> ts(t, nt);
  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) {
      Complex acc{};
      for (int k = 0; k <= p; ++k) {
        for (int l = -k; l <= k; ++l) acc += coeff_at(multipole, k, l) * coeff_at(ts, n + k, l - m);
      }
      out[coeff_index(n, m)] += sign(n + m) * acc;
    }
  }
}

void m2l_axial(std::span<const Complex> multipole, double distance, int p, std::span<Complex> out) {
  // I_j^0(rho z) = j! / rho^(j+1); all other orders vanish on the axis.
  double axis[2 * kMaxOrder + 1];
  const double inv = 1.0 / distance;
  double pw = inv;
  for (int j = 0; j <= 2 * p; ++j) {
    axis[j] = factorial(j) * pw;
    pw *= inv;
  }
  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) {
      Complex acc{};
      for (int k = m; k <= p; ++k) acc += multipole[coeff_index(k, m)] * axis[n + k];
      out[coeff_index(n, m)] = sign(n + m) * acc;
    }
  }
}

void m2l_rotated_accumulate(std::span<const Complex> multipole, const ZAlignRotation& rotation, double distance,
                            std::span<Complex> out) {
  rotation.m2l_accumulate(multipole, distance, out);
}

void l2l_accumulate(std::span<const Complex> parent, const Vec3& parent_center, const Vec3& child_center, int p,
                    std::span<Complex> out) {
  Complex r[num_coefficients(kMaxOrder)];
  const std::span<const Complex> rs(r, num_coefficients(p));
  regular_harmonics(child_center - parent_center, p, std::span<Complex>(r, num_coefficients(p)));
  for (int k = 0; k <= p; ++k) {
    for (int l = 0; l <= k; ++l) {
      Complex acc{};
      for (int n = k; n <= p; ++n) {
        const int j = n - k;
        const int lo = std::max(-n, l - j);
        const int hi = std::min(n, l + j);
        for (int m = lo; m <= hi; ++m) acc += coeff_at(parent, n, m) * coeff_at(rs, j, m - l);
      }
      out[coeff_index(k, l)] += acc;
    }
  }
}

PotentialGradient l2p(std::span<const Complex> local, const Vec3& center, int p, const Vec3& x,
                      std::span<Complex> scratch) {
  regular_harmonics(x - center, p, scratch);
  const std::span<const Complex> r(scratch.data(), num_coefficients(p));
  PotentialGradient out;
  double phi = 0.0, gx = 0.0, gy = 0.0, gz = 0.0;
  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) {
      const double w = (m == 0) ? 1.0 : 2.0;
      const Complex c = local[coeff_index(n, m)];
      phi += w * (c * r[coeff_index(n, m)]).real();
      if (n == 0) continue;
      const Complex up = (m + 1 <= n - 1) ? r[coeff_index(n - 1, m + 1)] : Complex{};
      const Complex dn = (m - 1 >= -(n - 1)) ? coeff_at(r, n - 1, m - 1) : Complex{};
      const Complex same = (m <= n - 1) ? r[coeff_index(n - 1, m)] : Complex{};
      const Complex dx = 0.5 * (up - dn);
      const Complex dy = Complex(0.0, -0.5) * (dn + up);
      gx += w * (c * dx).real();
      gy += w * (c * dy).real();
      gz += w * (c * same).real();
    }
  }
  out.potential = phi;
  out.gradient = {gx, gy, gz};
  return out;
}

PotentialGradient m2p(std::span<const Complex> multipole, const Vec3& center, int p, const Vec3& x) {
  Complex t[num_coefficients(kMaxOrder + 1)];
  const std::span<const Complex> ts(t, num_coefficients(p + 1));
  irregular_harmonics(x - center, p + 1, std::span<Complex>(t, num_coefficients(p + 1)));
  double phi = 0.0, gx = 0.0, gy = 0.0, gz = 0.0;
  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) {
      const double w = (m == 0) ? 1.0 : 2.0;
      const Complex c = multipole[coeff_index(n, m)];
      phi += w * (c * ts[coeff_index(n, m)]).real();
      const Complex up = ts[coeff_index(n + 1, m + 1)];
      const Complex dn = coeff_at(ts, n + 1, m - 1);
      const Complex dx = 0.5 * (up - dn);
      const Complex dy = Complex(0.0, -0.5) * (up + dn);
      gx += w * (c * dx).real();
      gy += w * (c * dy).real();
      gz -= w * (c * ts[coeff_index(n + 1, m)]).real();
    }
  }
  return {phi, {gx, gy, gz}};
}

}  // namespace ops

namespace {
void require_kind(const Expansion& e, ExpansionKind kind, const char* op) {
  if (e.kind() != kind) throw InputError(std::string(op) + ": wrong expansion kind");
}
}  // namespace

Expansion p2m(std::span<const Vec3> positions, std::span<const double> weights, const Vec3& center, int p) {
  if (positions.size() != weights.size()) throw InputError("p2m: positions and weights differ in length");
  Expansion e(p, center, ExpansionKind::multipole);
  ops::p2m_accumulate(positions, weights, center, p, e.coefficients());
  return e;
}

Expansion m2m(const Expansion& child, const Vec3& parent_center) {
  require_kind(child, ExpansionKind::multipole, "m2m");
  Expansion e(child.order(), parent_center, ExpansionKind::multipole);
  ops::m2m_accumulate(child.coefficients(), child.center(), parent_center, child.order(), e.coefficients());
  return e;
}

Expansion m2l(const Expansion& multipole, const Vec3& target_center) {
  require_kind(multipole, ExpansionKind::multipole, "m2l");
  Expansion e(multipole.order(), target_center, ExpansionKind::local);
  ops::m2l_accumulate(multipole.coefficients(), multipole.center(), target_center, multipole.order(),
                      e.coefficients());
  return e;
}

Expansion m2l_rotated(const Expansion& multipole, const Vec3& target_center) {
  require_kind(multipole, ExpansionKind::multipole, "m2l");
  const int p = multipole.order();
  const Vec3 d = target_center - multipole.center();
  const ZAlignRotation rot(d, p);
  Expansion e(p, target_center, ExpansionKind::local);
  ops::m2l_rotated_accumulate(multipole.coefficients(), rot, fmmbem::norm(d), e.coefficients());
  return e;
}

Expansion l2l(const Expansion& parent, const Vec3& child_center) {
  require_kind(parent, ExpansionKind::local, "l2l");
  Expansion e(parent.order(), child_center, ExpansionKind::local);
  ops::l2l_accumulate(parent.coefficients(), parent.center(), child_center, parent.order(), e.coefficients());
  return e;
}

PotentialGradient l2p(const Expansion& local, const Vec3& x) {
  require_kind(local, ExpansionKind::local, "l2p");
  std::vector<Complex> scratch(num_coefficients(local.order()));
  return ops::l2p(local.coefficients(), local.center(), local.order(), x, scratch);
}

PotentialGradient m2p(const Expansion& multipole, const Vec3& x) {
  require_kind(multipole, ExpansionKind::multipole, "m2p");
  return ops::m2p(multipole.coefficients(), multipole.center(), multipole.order(), x);
}

}  // namespace fmmbem::fmm
