#include "kernels.hpp"

#include "mrseq/constants.hpp"

#include <cmath>

namespace mrseq::bloch::detail {

namespace {

void rf_scalar(Spins const &s, RfPlan const &p)
{
  double const half_gh = 0.5 * kGamma * p.h;
  for (std::size_t i = 0; i < s.n; ++i) {
    double       mx = s.mx[i], my = s.my[i], mz = s.mz[i];
    // Strang splitting: half a step of relaxation on either side of each rotation.
    double const e1 = std::exp(-p.h * s.r1[i]), e1h = std::exp(-0.5 * p.h * s.r1[i]);
    double const e2 = std::exp(-p.h * s.r2[i]), e2h = std::exp(-0.5 * p.h * s.r2[i]);
    double const bz0 = s.dw[i] / kGamma;
    mx *= e2h;
    my *= e2h;
    mz = 1.0 + (mz - 1.0) * e1h;
    for (std::size_t k = 0; k < p.steps; ++k) {
      double const t = p.tm[k];
      double const x = s.px[i] + s.vx[i] * t, y = s.py[i] + s.vy[i] * t, z = s.pz[i] + s.vz[i] * t;
      double const bx = p.bx[k], by = p.by[k];
      double const bz = p.gx[k] * x + p.gy[k] * y + p.gz[k] * z + bz0;
      double const b = std::sqrt(bx * bx + by * by + bz * bz);
      double const inv = b > 0.0 ? 1.0 / b : 0.0;
      double const nx = bx * inv, ny = by * inv, nz = bz * inv;
      double const sh = std::sin(half_gh * b), ch = std::cos(half_gh * b);
      // Rotation by -θ about n, θ = γ|B|h.
      double const omc = 2.0 * sh * sh;
      double const c = 1.0 - omc;
      double const sn = 2.0 * sh * ch;
      double const cx = ny * mz - nz * my, cy = nz * mx - nx * mz, cz = nx * my - ny * mx;
      double const dot = (nx * mx + ny * my + nz * mz) * omc;
      double const rx = mx * c - cx * sn + nx * dot;
      double const ry = my * c - cy * sn + ny * dot;
      double const rz = mz * c - cz * sn + nz * dot;
      bool const last = k + 1 == p.steps;
      mx = rx * (last ? e2h : e2);
      my = ry * (last ? e2h : e2);
      mz = 1.0 + (rz - 1.0) * (last ? e1h : e1);
    }
    s.mx[i] = mx;
    s.my[i] = my;
    s.mz[i] = mz;
  }
}

void free_scalar(Spins const &s, FreeSeg const &g)
{
  double const d = g.b - g.a;
  double const m = 0.5 * (g.a + g.b);
  double const w = kGamma * d / 6.0;
  for (std::size_t i = 0; i < s.n; ++i) {
    // ∫ G(t)·r(t) dt is quadratic in t, so Simpson's rule is exact.
    auto dot = [&](double const *gv, double t) {
      return gv[0] * (s.px[i] + s.vx[i] * t) + gv[1] * (s.py[i] + s.vy[i] * t) + gv[2] * (s.pz[i] + s.vz[i] * t);
    };
    double const phi = w * (dot(g.ga, g.a) + 4.0 * dot(g.gm, m) + dot(g.gb, g.b)) + s.dw[i] * d;
    double const c = std::cos(phi), sn = std::sin(phi);
    double const e1 = std::exp(-d * s.r1[i]);
    double const e2 = std::exp(-d * s.r2[i]);
    double const mx = s.mx[i], my = s.my[i];
    s.mx[i] = (mx * c + my * sn) * e2;
    s.my[i] = (my * c - mx * sn) * e2;
    s.mz[i] = 1.0 + (s.mz[i] - 1.0) * e1;
  }
}

std::complex<double> sum_scalar(Spins const &s)
{
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < s.n; ++i) {
    re += s.pd[i] * s.mx[i];
    im += s.pd[i] * s.my[i];
  }
  return {re, im};
}

} // namespace

Kernels const scalar_kernels{"scalar", rf_scalar, free_scalar, sum_scalar};

} // namespace mrseq::bloch::detail
