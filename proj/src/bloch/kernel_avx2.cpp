// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "kernels.hpp"

#include "mrseq/constants.hpp"

#include <immintrin.h>

// glibc libmvec AVX2 entry points (vector function ABI).
extern "C" {
__m256d _ZGVdN4v_sin(__m256d);
__m256d _ZGVdN4v_cos(__m256d);
__m256d _ZGVdN4v_exp(__m256d);
}

namespace mrseq::bloch::detail {

namespace {

inline __m256d bc(double v) { return _mm256_set1_pd(v); }
inline __m256d mul(__m256d a, __m256d b) { return _mm256_mul_pd(a, b); }
inline __m256d add(__m256d a, __m256d b) { return _mm256_add_pd(a, b); }
inline __m256d sub(__m256d a, __m256d b) { return _mm256_sub_pd(a, b); }
inline __m256d fma(__m256d a, __m256d b, __m256d c) { return _mm256_fmadd_pd(a, b, c); }

void rf_avx2(Spins const &s, RfPlan const &p)
{
  std::size_t const n4 = s.n & ~std::size_t(3);
  __m256d const     half_gh = bc(0.5 * kGamma * p.h);
  __m256d const     one = bc(1.0), two = bc(2.0), zero = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d       mx = _mm256_loadu_pd(s.mx + i), my = _mm256_loadu_pd(s.my + i), mz = _mm256_loadu_pd(s.mz + i);
    __m256d const px = _mm256_loadu_pd(s.px + i), py = _mm256_loadu_pd(s.py + i), pz = _mm256_loadu_pd(s.pz + i);
    __m256d const vx = _mm256_loadu_pd(s.vx + i), vy = _mm256_loadu_pd(s.vy + i), vz = _mm256_loadu_pd(s.vz + i);
    __m256d const r1 = _mm256_loadu_pd(s.r1 + i), r2 = _mm256_loadu_pd(s.r2 + i);
    __m256d const e1 = _ZGVdN4v_exp(mul(bc(-p.h), r1)), e1h = _ZGVdN4v_exp(mul(bc(-0.5 * p.h), r1));
    __m256d const e2 = _ZGVdN4v_exp(mul(bc(-p.h), r2)), e2h = _ZGVdN4v_exp(mul(bc(-0.5 * p.h), r2));
    __m256d const bz0 = mul(_mm256_loadu_pd(s.dw + i), bc(1.0 / kGamma));
    mx = mul(mx, e2h);
    my = mul(my, e2h);
    mz = fma(sub(mz, one), e1h, one);
    for (std::size_t k = 0; k < p.steps; ++k) {
      __m256d const t = bc(p.tm[k]);
      __m256d const x = fma(vx, t, px), y = fma(vy, t, py), z = fma(vz, t, pz);
      __m256d const bx = bc(p.bx[k]), by = bc(p.by[k]);
      __m256d const bz = fma(bc(p.gx[k]), x, fma(bc(p.gy[k]), y, fma(bc(p.gz[k]), z, bz0)));
      __m256d const b = _mm256_sqrt_pd(fma(bx, bx, fma(by, by, mul(bz, bz))));
      __m256d const inv = _mm256_and_pd(_mm256_cmp_pd(b, zero, _CMP_GT_OQ), _mm256_div_pd(one, b));
      __m256d const nx = mul(bx, inv), ny = mul(by, inv), nz = mul(bz, inv);
      __m256d const ang = mul(half_gh, b);
      __m256d const sh = _ZGVdN4v_sin(ang), ch = _ZGVdN4v_cos(ang);
      __m256d const omc = mul(two, mul(sh, sh));
      __m256d const c = sub(one, omc);
      __m256d const sn = mul(two, mul(sh, ch));
      __m256d const cx = sub(mul(ny, mz), mul(nz, my));
      __m256d const cy = sub(mul(nz, mx), mul(nx, mz));
      __m256d const cz = sub(mul(nx, my), mul(ny, mx));
      __m256d const dot = mul(fma(nx, mx, fma(ny, my, mul(nz, mz))), omc);
      __m256d const rx = fma(nx, dot, sub(mul(mx, c), mul(cx, sn)));
      __m256d const ry = fma(ny, dot, sub(mul(my, c), mul(cy, sn)));
      __m256d const rz = fma(nz, dot, sub(mul(mz, c), mul(cz, sn)));
      bool const    last = k + 1 == p.steps;
      __m256d const f2 = last ? e2h : e2, f1 = last ? e1h : e1;
      mx = mul(rx, f2);
      my = mul(ry, f2);
      mz = fma(sub(rz, one), f1, one);
    }
    _mm256_storeu_pd(s.mx + i, mx);
    _mm256_storeu_pd(s.my + i, my);
    _mm256_storeu_pd(s.mz + i, mz);
  }
  if (n4 < s.n) { scalar_kernels.rf(s.slice(n4, s.n - n4), p); }
}

void free_avx2(Spins const &s, FreeSeg const &g)
{
  std::size_t const n4 = s.n & ~std::size_t(3);
  double const      d = g.b - g.a;
  double const      m = 0.5 * (g.a + g.b);
  __m256d const     w = bc(kGamma * d / 6.0);
  __m256d const     vd = bc(d), nd = bc(-d), one = bc(1.0), four = bc(4.0);
  __m256d const     ta = bc(g.a), tm = bc(m), tb = bc(g.b);
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d const px = _mm256_loadu_pd(s.px + i), py = _mm256_loadu_pd(s.py + i), pz = _mm256_loadu_pd(s.pz + i);
    __m256d const vx = _mm256_loadu_pd(s.vx + i), vy = _mm256_loadu_pd(s.vy + i), vz = _mm256_loadu_pd(s.vz + i);
    auto          dot = [&](double const *gv, __m256d t) {
      return fma(bc(gv[0]), fma(vx, t, px), fma(bc(gv[1]), fma(vy, t, py), mul(bc(gv[2]), fma(vz, t, pz))));
    };
    __m256d const integral = add(add(dot(g.ga, ta), mul(four, dot(g.gm, tm))), dot(g.gb, tb));
    __m256d const phi = fma(w, integral, mul(_mm256_loadu_pd(s.dw + i), vd));
    __m256d const c = _ZGVdN4v_cos(phi), sn = _ZGVdN4v_sin(phi);
    __m256d const e1 = _ZGVdN4v_exp(mul(nd, _mm256_loadu_pd(s.r1 + i)));
    __m256d const e2 = _ZGVdN4v_exp(mul(nd, _mm256_loadu_pd(s.r2 + i)));
    __m256d const mx = _mm256_loadu_pd(s.mx + i), my = _mm256_loadu_pd(s.my + i), mz = _mm256_loadu_pd(s.mz + i);
    _mm256_storeu_pd(s.mx + i, mul(fma(mx, c, mul(my, sn)), e2));
    _mm256_storeu_pd(s.my + i, mul(sub(mul(my, c), mul(mx, sn)), e2));
    _mm256_storeu_pd(s.mz + i, fma(sub(mz, one), e1, one));
  }
  if (n4 < s.n) { scalar_kernels.free(s.slice(n4, s.n - n4), g); }
}

std::complex<double> sum_avx2(Spins const &s)
{
  std::size_t const n4 = s.n & ~std::size_t(3);
  __m256d           re = _mm256_setzero_pd(), im = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d const pd = _mm256_loadu_pd(s.pd + i);
    re = fma(pd, _mm256_loadu_pd(s.mx + i), re);
    im = fma(pd, _mm256_loadu_pd(s.my + i), im);
  }
  alignas(32) double r[4], q[4];
  _mm256_store_pd(r, re);
  _mm256_store_pd(q, im);
  std::complex<double> out{(r[0] + r[1]) + (r[2] + r[3]), (q[0] + q[1]) + (q[2] + q[3])};
  if (n4 < s.n) { out += scalar_kernels.sum(s.slice(n4, s.n - n4)); }
  return out;
}

} // namespace

Kernels const avx2_kernels{"avx2", rf_avx2, free_avx2, sum_avx2};

} // namespace mrseq::bloch::detail
