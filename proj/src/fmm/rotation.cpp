#include "fmmbem/fmm/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "fmmbem/errors.hpp"
#include "fmmbem/fmm/m2l_kernel.hpp"

namespace fmmbem::fmm {

namespace {

struct SphereRule {
  std::vector<Vec3> points;
  std::vector<double> weights;
};

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

SphereRule sphere_rule(int p) {
  std::vector<double> gx, gw;
  gauss_legendre(p + 1, gx, gw);
  const int nphi = 2 * p + 2;
  SphereRule rule;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double ct = gx[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / nphi;
      rule.points.push_back({st * std::cos(phi), st * std::sin(phi), ct});
      rule.weights.push_back(gw[i] * 2.0 * std::numbers::pi / nphi);
    }
  }
  return rule;
}

Mat3 rotation_y(double beta) {
  Mat3 r;
  const double c = std::cos(beta), s = std::sin(beta);
  r(0, 0) = c;
  r(0, 1) = 0;
  r(0, 2) = s;
  r(1, 0) = 0;
  r(1, 1) = 1;
  r(1, 2) = 0;
  r(2, 0) = -s;
  r(2, 1) = 0;
  r(2, 2) = c;
  return r;
}

}  // namespace

std::vector<std::vector<Complex>> harmonic_rotation_matrices(const Mat3& q, int p) {
  const auto rule = sphere_rule(p);
  const std::size_t npts = rule.points.size();
  const std::size_t nc = num_coefficients(p);
  std::vector<Complex> y(npts * nc), yq(npts * nc);
  for (std::size_t k = 0; k < npts; ++k) {
    regular_harmonics(rule.points[k], p, std::span<Complex>(y.data() + k * nc, nc));
    regular_harmonics(q * rule.points[k], p, std::span<Complex>(yq.data() + k * nc, nc));
  }

  std::vector<std::vector<Complex>> out(p + 1);
  std::vector<Complex> a, b;
  for (int n = 0; n <= p; ++n) {
    const int w = 2 * n + 1;
    out[n].assign(static_cast<std::size_t>(w) * w, Complex{});
    std::vector<double> norms(w, 0.0);
    a.resize(w);
    b.resize(w);
    for (std::size_t k = 0; k < npts; ++k) {
      const std::span<const Complex> yk(y.data() + k * nc, nc);
      const std::span<const Complex> yqk(yq.data() + k * nc, nc);
      for (int m = -n; m <= n; ++m) {
        a[m + n] = coeff_at(yqk, n, m);
        b[m + n] = std::conj(coeff_at(yk, n, m));
      }
      const double wt = rule.weights[k];
      for (int i = 0; i < w; ++i) {
        norms[i] += wt * std::norm(b[i]);
        const Complex ai = wt * a[i];
        for (int j = 0; j < w; ++j) out[n][i * w + j] += ai * b[j];
      }
    }
    for (int i = 0; i < w; ++i)
      for (int j = 0; j < w; ++j) out[n][i * w + j] /= norms[j];
  }
  return out;
}

std::vector<std::vector<double>> y_rotation_matrices(double beta, int p) {
  const auto full = harmonic_rotation_matrices(rotation_y(beta), p);
  std::vector<std::vector<double>> d(full.size());
  for (std::size_t n = 0; n < full.size(); ++n) {
    d[n].resize(full[n].size());
    for (std::size_t i = 0; i < full[n].size(); ++i) d[n][i] = full[n][i].real();
  }
  return d;
}

ZAlignRotation::ZAlignRotation(const Vec3& direction, int p) : p_(p) {
  const double len = norm(direction);
  if (!(len > 0.0)) throw InputError("rotation direction must be non-zero");
  const double alpha = std::atan2(direction.y, direction.x);
  const double beta = std::acos(std::clamp(direction.z / len, -1.0, 1.0));
  init(alpha, y_rotation_matrices(-beta, p));
}

ZAlignRotation::ZAlignRotation(double alpha, int p, const std::vector<std::vector<double>>& d) : p_(p) {
  init(alpha, d);
}

void ZAlignRotation::init(double alpha, const std::vector<std::vector<double>>& d) {
  const int p = p_;
  phase_re_.resize(p + 1);
  phase_im_.resize(p + 1);
  for (int m = 0; m <= p; ++m) {
    phase_re_[m] = std::cos(m * alpha);
    phase_im_[m] = std::sin(m * alpha);
  }
  offset_.resize(p + 2);
  offset_[0] = 0;
  for (int n = 0; n <= p; ++n) offset_[n + 1] = offset_[n] + static_cast<std::size_t>(n + 1) * (n + 1);
  fwd_re_.assign(offset_[p + 1], 0.0);
  fwd_im_.assign(offset_[p + 1], 0.0);
  bwd_re_.assign(offset_[p + 1], 0.0);
  bwd_im_.assign(offset_[p + 1], 0.0);
  for (int n = 0; n <= p; ++n) {
    const int w = 2 * n + 1;
    auto dm = [&](int m, int mp) { return d[n][(m + n) * w + (mp + n)]; };
    for (int m = 0; m <= n; ++m) {
      for (int mp = 0; mp <= n; ++mp) {
        // Both stored with the output index as the row.
        const std::size_t fat = offset_[n] + static_cast<std::size_t>(m) * (n + 1) + mp;
        const std::size_t bat = offset_[n] + static_cast<std::size_t>(mp) * (n + 1) + m;
        if (mp == 0) {
          fwd_re_[fat] = fwd_im_[fat] = dm(m, 0);
        } else {
          const double s = (mp & 1) ? -1.0 : 1.0;
          fwd_re_[fat] = dm(m, mp) + s * dm(m, -mp);
          fwd_im_[fat] = dm(m, mp) - s * dm(m, -mp);
        }
        if (m == 0) {
          bwd_re_[bat] = bwd_im_[bat] = dm(0, mp);
        } else {
          const double s = (m & 1) ? -1.0 : 1.0;
          bwd_re_[bat] = dm(m, mp) + s * dm(-m, mp);
          bwd_im_[bat] = dm(m, mp) - s * dm(-m, mp);
        }
      }
    }
  }
}

void ZAlignRotation::to_aligned(std::span<const Complex> in, std::span<Complex> out) const {
  const int p = p_;
  double sre[kMaxOrder + 1], sim[kMaxOrder + 1], ore[kMaxOrder + 1], oim[kMaxOrder + 1];
  for (int n = 0; n <= p; ++n) {
    for (int mp = 0; mp <= n; ++mp) {
      const Complex v = in[coeff_index(n, mp)];
      sre[mp] = v.real() * phase_re_[mp] - v.imag() * phase_im_[mp];
      sim[mp] = v.real() * phase_im_[mp] + v.imag() * phase_re_[mp];
    }
    const double* fr = fwd_re_.data() + offset_[n];
    const double* fi = fwd_im_.data() + offset_[n];
    for (int m = 0; m <= n; ++m) {
      const double* cr = fr + static_cast<std::size_t>(m) * (n + 1);
      const double* ci = fi + static_cast<std::size_t>(m) * (n + 1);
      double a = 0.0, b = 0.0;
      for (int mp = 0; mp <= n; ++mp) {
        a += cr[mp] * sre[mp];
        b += ci[mp] * sim[mp];
      }
      ore[m] = a;
      oim[m] = b;
    }
    for (int m = 0; m <= n; ++m) out[coeff_index(n, m)] = Complex(ore[m], oim[m]);
  }
}

void ZAlignRotation::accumulate_from_aligned(std::span<const Complex> in, std::span<Complex> out) const {
  const int p = p_;
  double acc_re[kMaxOrder + 1], acc_im[kMaxOrder + 1];
  for (int n = 0; n <= p; ++n) {
    const double* br = bwd_re_.data() + offset_[n];
    const double* bi = bwd_im_.data() + offset_[n];
    for (int mp = 0; mp <= n; ++mp) {
      const double* rr = br + static_cast<std::size_t>(mp) * (n + 1);
      const double* ri = bi + static_cast<std::size_t>(mp) * (n + 1);
      double a = 0.0, b = 0.0;
      for (int m = 0; m <= n; ++m) {
        const Complex v = in[coeff_index(n, m)];
        a += rr[m] * v.real();
        b += ri[m] * v.imag();
      }
      acc_re[mp] = a;
      acc_im[mp] = b;
    }
    for (int mp = 0; mp <= n; ++mp) {
      // multiply by e^{-i mp alpha}
      const double re = acc_re[mp] * phase_re_[mp] + acc_im[mp] * phase_im_[mp];
      const double im = acc_im[mp] * phase_re_[mp] - acc_re[mp] * phase_im_[mp];
      out[coeff_index(n, mp)] += Complex(re, im);
    }
  }
}

RotationData ZAlignRotation::data() const {
  return {p_, phase_re_.data(), phase_im_.data(), offset_.data(), fwd_re_.data(), fwd_im_.data(), bwd_re_.data(),
          bwd_im_.data()};
}

void ZAlignRotation::m2l_accumulate(std::span<const Complex> multipole, double distance,
                                    std::span<Complex> out) const {
  const Complex* in[1] = {multipole.data()};
  Complex* o[1] = {out.data()};
  m2l_lanes<1>(data(), in, distance, o);
}

void ZAlignRotation::m2l_accumulate_lanes(const Complex* const* multipoles, double distance,
                                          Complex* const* out) const {
  m2l_kernel()(data(), multipoles, distance, out);
}

// The regular harmonics carry 1/(n+m)!, so D is not unitary: multipoles
// rotate with conj(D) and locals with D^-T. The two are related by
// conj(D)^-1 = S D^T S^-1 with S = diag(1 / ((n-m)! (n+m)!)), which lets
// M2M and L2L reuse the same pair of per-degree passes. Along the axis only
// the m = 0 regular harmonics survive: R_j^0 = rho^j / j!.
namespace {

double harmonic_weight(int n, int m) { return 1.0 / (factorial(n - m) * factorial(n + m)); }

}  // namespace

void ZAlignRotation::m2m_accumulate(std::span<const Complex> multipole, double distance,
                                    std::span<Complex> out) const {
  const int p = p_;
  const std::size_t nc = num_coefficients(p);
  Complex a[num_coefficients(kMaxOrder)], b[num_coefficients(kMaxOrder)], c[num_coefficients(kMaxOrder)];
  to_aligned(multipole, {a, nc});
  double pw[kMaxOrder + 1];
  pw[0] = 1.0;
  for (int j = 1; j <= p; ++j) pw[j] = pw[j - 1] * distance / j;
  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) {
      Complex acc{};
      for (int k = m; k <= n; ++k) acc += a[coeff_index(k, m)] * pw[n - k];
      b[coeff_index(n, m)] = acc / harmonic_weight(n, m);
      c[coeff_index(n, m)] = Complex{};
    }
  }
  accumulate_from_aligned({b, nc}, {c, nc});
  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) out[coeff_index(n, m)] += c[coeff_index(n, m)] * harmonic_weight(n, m);
  }
}

void ZAlignRotation::l2l_accumulate(std::span<const Complex> local, double distance, std::span<Complex> out) const {
  const int p = p_;
  const std::size_t nc = num_coefficients(p);
  Complex a[num_coefficients(kMaxOrder)], b[num_coefficients(kMaxOrder)];
  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) b[coeff_index(n, m)] = local[coeff_index(n, m)] * harmonic_weight(n, m);
  }
  to_aligned({b, nc}, {a, nc});
  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) a[coeff_index(n, m)] /= harmonic_weight(n, m);
  }
  double pw[kMaxOrder + 1];
  pw[0] = 1.0;
  for (int j = 1; j <= p; ++j) pw[j] = pw[j - 1] * distance / j;
  for (int k = 0; k <= p; ++k) {
    for (int m = 0; m <= k; ++m) {
      Complex acc{};
      for (int n = k; n <= p; ++n) acc += a[coeff_index(n, m)] * pw[n - k];
      b[coeff_index(k, m)] = acc;
    }
  }
  accumulate_from_aligned({b, nc}, out);
}

RotationTable::RotationTable(int p) : p_(p) {
  // Polar angle depends only on (dz, dx^2 + dy^2); share the y-rotation matrices.
  std::map<std::pair<int, int>, std::vector<std::vector<double>>> by_beta;
  for (int dz = -3; dz <= 3; ++dz) {
    for (int dy = -3; dy <= 3; ++dy) {
      for (int dx = -3; dx <= 3; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        const auto key = std::make_pair(dz, dx * dx + dy * dy);
        auto it = by_beta.find(key);
        if (it == by_beta.end()) {
          const double beta = std::atan2(std::sqrt(static_cast<double>(key.second)), static_cast<double>(dz));
          it = by_beta.emplace(key, y_rotation_matrices(-beta, p)).first;
        }
        const double alpha = std::atan2(static_cast<double>(dy), static_cast<double>(dx));
        table_[index(dx, dy, dz)] = ZAlignRotation(alpha, p, it->second);
      }
    }
  }
}

std::shared_ptr<const RotationTable> rotation_table(int p) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const RotationTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[p];
  if (!slot) slot = std::make_shared<const RotationTable>(p);
  return slot;
}

}  // namespace fmmbem::fmm
