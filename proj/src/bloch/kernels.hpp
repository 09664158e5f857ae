#pragma once

#include <complex>
#include <cstddef>

namespace mrseq::bloch::detail {

// Structure-of-arrays view of a chunk of spins. Positions follow
// r(t) = p + v·t with t measured from the start of the current event.
struct Spins
{
  double       *mx, *my, *mz;
  double const *px, *py, *pz;
  double const *vx, *vy, *vz;
  double const *dw;  // rad/s
  double const *r1, *r2;  // 1/T1, 1/T2
  double const *pd;
  std::size_t   n;

  Spins slice(std::size_t i, std::size_t count) const
  {
    return {mx + i, my + i, mz + i, px + i, py + i, pz + i, vx + i, vy + i, vz + i, dw + i, r1 + i, r2 + i, pd + i, count};
  }
};

// Piecewise-constant RF steps of length h; per-step field at the step midpoint.
struct RfPlan
{
  double        h;
  std::size_t   steps;
  double const *bx, *by;  // T
  double const *gx, *gy, *gz;  // T/m
  double const *tm;  // midpoint times relative to event start
};

// Closed-form free precession over [a, b]; ga, gm, gb are the gradients at
// a, (a+b)/2 and b.
struct FreeSeg
{
  double a, b;
  double ga[3], gm[3], gb[3];
};

struct Kernels
{
  char const *name;
  void (*rf)(Spins const &, RfPlan const &);
  void (*free)(Spins const &, FreeSeg const &);
  std::complex<double> (*sum)(Spins const &);
};

extern Kernels const scalar_kernels;
#if defined(MRSEQ_HAVE_AVX2)
extern Kernels const avx2_kernels;
#endif

} // namespace mrseq::bloch::detail
