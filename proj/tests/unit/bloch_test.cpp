#include "mrseq/bloch.hpp"
#include "mrseq/constants.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mrseq;
using namespace mrseq::bloch;
using phantom::Phantom;
using phantom::Spin;
using seq::Event;
using seq::EventTimeline;

namespace {

std::vector<KernelKind> kernels()
{
  std::vector<KernelKind> out{KernelKind::scalar};
  if (avx2_available()) { out.push_back(KernelKind::avx2); }
  return out;
}

SimConfig config(KernelKind k)
{
  SimConfig c;
  c.kernel = k;
  c.threads = 1;
  return c;
}

struct Builder
{
  EventTimeline tl;

  double now() const { return tl.total_duration; }

  Event &push(double d)
  {
    Event e;
    e.t_start = now();
    e.t_end = now() + d;
    tl.events.push_back(e);
    tl.total_duration = e.t_end;
    return tl.events.back();
  }

  // Hard pulse about an axis at `phase_deg` from x.
  void hard(double flip_deg, double d, double phase_deg = 0.0)
  {
    Event &e = push(d);
    e.rf = seq::RfWave{seq::RfShape::hard, deg_to_rad(flip_deg) / (kGamma * d), d, deg_to_rad(phase_deg), 0.0, 3};
  }

  void free(double d, std::array<double, 3> g = {})
  {
    Event &e = push(d);
    e.g0 = e.g1 = g;
  }

  void adc(double d, int n, std::array<double, 3> g = {})
  {
    Event &e = push(d);
    e.g0 = e.g1 = g;
    e.adc = seq::Adc{n, 0, false};
  }
};

Spin make_spin(double x, double y, double z, float t1, float t2, float dw = 0.0F, float pd = 1.0F)
{
  Spin s;
  s.r0 = {float(x), float(y), float(z)};
  s.t1 = t1;
  s.t2 = t2;
  s.delta_omega = dw;
  s.pd = pd;
  return s;
}

Phantom one(Spin s)
{
  Phantom p;
  p.name = "one";
  p.spins.push_back(s);
  return p;
}

double rel(std::complex<double> a, std::complex<double> b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST_CASE("hard pulses flip exactly")
{
  for (auto k : kernels()) {
    INFO(to_string(k));
    Phantom const p = one(make_spin(0.01, 0.02, 0.0, INFINITY, INFINITY));
    Builder       b;
    b.hard(90, 100e-6);
    MagState s = MagState::equilibrium(1);
    simulate(b.tl, p, {}, config(k), {}, &s);
    CHECK(std::hypot(s.mx[0], s.my[0]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.my[0] == doctest::Approx(1.0).epsilon(1e-9));  // x pulse: z -> +y
    CHECK(std::abs(s.mz[0]) < 1e-9);

    Builder b2;
    b2.hard(180, 100e-6);
    s = MagState::equilibrium(1);
    simulate(b2.tl, p, {}, config(k), {}, &s);
    CHECK(s.mz[0] == doctest::Approx(-1.0).epsilon(1e-9));
  }
}

TEST_CASE("free precession against the closed form")
{
  std::mt19937                           rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto k : kernels()) {
    INFO(to_string(k));
    // 100 Hz for 10 ms is one full turn.
    Phantom const p0 = one(make_spin(0, 0, 0, INFINITY, INFINITY, float(2 * kPi * 100)));
    Builder       b0;
    b0.free(10e-3);
    MagState s0 = MagState::equilibrium(1);
    s0.mx[0] = 1.0;
    s0.mz[0] = 0.0;
    simulate(b0.tl, p0, {}, config(k), {}, &s0);
    // float(2π·100) is not exactly 2π·100; compare against the stored value.
    double const dw = double(p0.spins[0].delta_omega);
    CHECK(std::arg(std::complex<double>(s0.mx[0], s0.my[0])) == doctest::Approx(std::remainder(-dw * 10e-3, 2 * kPi)).epsilon(1e-9));

    for (int trial = 0; trial < 50; ++trial) {
      float const t2 = float(1e-3 + u(rng) * 0.2);
      float const t1 = t2 + float(u(rng) * 2.0);
      float const w = float((u(rng) - 0.5) * 2 * kPi * 2000);
      double const t = u(rng) * 0.3;
      Phantom const p = one(make_spin(0, 0, 0, t1, t2, w));
      Builder       b;
      b.free(t);
      MagState s = MagState::equilibrium(1);
      s.mx[0] = 0.6;
      s.my[0] = -0.3;
      s.mz[0] = -0.2;
      simulate(b.tl, p, {}, config(k), {}, &s);
      std::complex<double> const want = std::complex<double>(0.6, -0.3) * std::exp(std::complex<double>(-t / t2, -double(w) * t));
      double const               want_z = 1.0 + (-0.2 - 1.0) * std::exp(-t / t1);
      CHECK(rel({s.mx[0], s.my[0]}, want) < 1e-9);
      CHECK(std::abs(s.mz[0] - want_z) <= 1e-9 * std::abs(want_z));
    }
  }
}

TEST_CASE("signal under a constant read gradient")
{
  double const x0 = 0.037, g = 10e-3, t2 = 0.05, pd = 0.8;
  for (auto k : kernels()) {
    INFO(to_string(k));
    Phantom const p = one(make_spin(x0, 0.0, 0.0, 1.0F, float(t2), 0.0F, float(pd)));
    Builder       b;
    b.adc(20e-3, 256, {g, 0.0, 0.0});
    MagState s = MagState::equilibrium(1);
    s.mx[0] = 1.0;
    s.mz[0] = 0.0;
    auto const raw = simulate(b.tl, p, {}, config(k), {}, &s);
    REQUIRE(raw.samples.size() == 256);
    double worst = 0.0;
    for (std::size_t j = 0; j < raw.samples.size(); ++j) {
      double const               t = raw.sample_times[j];
      double const               x = double(float(x0));
      std::complex<double> const want = double(float(pd)) * std::exp(std::complex<double>(-t / double(float(t2)), -kGamma * g * x * t));
      worst = std::max(worst, rel(raw.samples[j], want));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("moving spin phase and wrap reset")
{
  Phantom p = one(make_spin(0.0, 0.0, -0.01, INFINITY, INFINITY));
  phantom::MotionPath m;
  m.v = {0.0, 0.0, 0.5};
  m.region.lo = {-1, -1, -0.02};
  m.region.hi = {1, 1, 0.02};
  p.motion.push_back(m);
  p.spins[0].motion_id = 0;
  double const z0 = double(p.spins[0].r0[2]);
  double const g = 5e-3, t = 10e-3;
  for (auto k : kernels()) {
    INFO(to_string(k));
    Builder b;
    b.free(t, {0.0, 0.0, g});
    MagState s = MagState::equilibrium(1);
    s.mx[0] = 1.0;
    s.mz[0] = 0.0;
    simulate(b.tl, p, {}, config(k), {}, &s);
    double const phi = kGamma * g * (z0 * t + 0.5 * 0.5 * t * t);
    CHECK(rel({s.mx[0], s.my[0]}, std::polar(1.0, -phi)) < 1e-9);

    // Saturate, then travel through a wrap at t = 0.06 s: fresh magnetisation.
    Builder w;
    w.hard(90, 50e-6);
    w.free(0.1);
    s = MagState::equilibrium(1);
    simulate(w.tl, p, {}, config(k), {}, &s);
    CHECK(s.mz[0] == 1.0);
    CHECK(s.mx[0] == 0.0);
  }
}

TEST_CASE("spin echo refocuses off-resonance")
{
  Phantom p;
  p.name = "spread";
  for (int i = 0; i < 200; ++i) {
    p.spins.push_back(make_spin(0, 0, 0, 1.0F, 0.1F, float(2 * kPi * 500 * (2 * (i + 0.5) / 200 - 1))));
  }
  double const te = 20e-3, d = 20e-6;
  Builder      b;
  b.hard(90, d);
  b.free(te / 2 - d);
  b.hard(180, d, 90);
  b.free(te / 2 - d / 2 - 0.5e-6);
  b.adc(1e-6, 1);
  for (auto k : kernels()) {
    auto const raw = simulate(b.tl, p, {}, config(k));
    double     pd = 0;
    for (auto const &s : p.spins) { pd += s.pd; }
    CHECK(std::abs(raw.samples[0]) == doctest::Approx(std::exp(-te / double(0.1F)) * pd).epsilon(5e-3));
  }
}

TEST_CASE("kernels agree, spins are independent, runs are deterministic")
{
  // Slice-selective sinc on a spread of static and flowing spins with off-resonance.
  std::mt19937                          rng(3);
  std::uniform_real_distribution<float> u(-1.0F, 1.0F);
  Phantom                               p;
  p.name = "mix";
  phantom::MotionPath m;
  m.v = {0.0, 0.02, 0.3};
  m.region.lo = {-0.1, -0.01, -0.004};
  m.region.hi = {0.1, 0.01, 0.004};
  p.motion.push_back(m);
  for (int i = 0; i < 2500; ++i) {
    Spin s = make_spin(0.05 * u(rng), 0.01 * u(rng), 0.004 * u(rng), 0.9F, 0.07F, 200.0F * u(rng), 0.5F + 0.5F * u(rng));
    if (i % 4 == 0) { s.motion_id = 0; }
    p.spins.push_back(s);
  }
  EventTimeline tl;
  {
    Builder      b;
    double const th = 4e-3, trf = 1e-3;
    double const gss = 4.0 / trf / (kGammaBar * th);
    Event       &rf = b.push(trf);
    rf.rf = seq::RfWave{seq::RfShape::sinc, 0.0, trf, 0.0, 500.0, 3};
    rf.rf->amplitude = 5e-6;
    rf.g0 = rf.g1 = {0.0, 0.0, gss};
    Event &ramp = b.push(2e-4);
    ramp.g0 = {0.0, 0.0, gss};
    ramp.g1 = {0.0, 0.0, -gss};
    b.free(1e-3, {-5e-3, 2e-3, -gss});
    for (int line = 0; line < 6; ++line) {
      b.adc(1e-3, 40, {line % 2 ? -8e-3 : 8e-3, 0.0, 0.0});
      b.free(3e-4, {0.0, 3e-3, 0.0});
    }
    tl = b.tl;
  }

  SimConfig cfg = config(KernelKind::scalar);
  auto const ref = simulate(tl, p, {}, cfg);
  double     peak = 0;
  for (auto z : ref.samples) { peak = std::max(peak, std::abs(z)); }
  REQUIRE(peak > 1.0);

  if (avx2_available()) {
    auto const vec = simulate(tl, p, {}, config(KernelKind::avx2));
    double     worst = 0;
    for (std::size_t j = 0; j < ref.samples.size(); ++j) { worst = std::max(worst, std::abs(vec.samples[j] - ref.samples[j]) / peak); }
    CHECK(worst < 1e-10);
  }

  Phantom a = p, bb = p;
  a.spins.resize(1500);
  bb.spins.erase(bb.spins.begin(), bb.spins.begin() + 1500);
  auto const sa = simulate(tl, a, {}, cfg);
  auto const sb = simulate(tl, bb, {}, cfg);
  double     worst = 0;
  for (std::size_t j = 0; j < ref.samples.size(); ++j) {
    worst = std::max(worst, std::abs(sa.samples[j] + sb.samples[j] - ref.samples[j]) / std::max(1e-3 * peak, std::abs(ref.samples[j])));
  }
  CHECK(worst < 1e-12);

  for (int threads : {2, 3, 8}) {
    SimConfig c = cfg;
    c.threads = threads;
    auto const again = simulate(tl, p, {}, c);
    CHECK(again.samples == ref.samples);
  }
}

TEST_CASE("progress, cancellation and bad states")
{
  Phantom p;
  p.name = "many";
  for (int i = 0; i < 3000; ++i) { p.spins.push_back(make_spin(i * 1e-5, 0, 0, 1.0F, 0.1F)); }
  Builder b;
  for (int i = 0; i < 20; ++i) {
    b.hard(30, 200e-6);
    b.adc(1e-3, 16, {1e-3, 0, 0});
  }
  std::vector<double> seen;
  RunControl          ctl;
  ctl.progress = [&](double f) { seen.push_back(f); };
  SimConfig cfg;
  cfg.threads = 3;
  simulate(b.tl, p, {}, cfg, ctl);
  REQUIRE(!seen.empty());
  CHECK(std::is_sorted(seen.begin(), seen.end()));
  CHECK(seen.back() == 1.0);
  CHECK(seen.front() >= 0.0);

  std::atomic<bool> cancel{true};
  RunControl        stop;
  stop.cancel = &cancel;
  CHECK_THROWS_AS(simulate(b.tl, p, {}, cfg, stop), Cancelled);

  MagState s = MagState::equilibrium(p.spins.size());
  s.mz[1234] = NAN;
  try {
    simulate(b.tl, p, {}, cfg, {}, &s);
    FAIL("expected NonFiniteState");
  } catch (NonFiniteState const &e) {
    CHECK(e.spin() == 1234);
  }

  SimConfig bad;
  bad.dt_rf = 2e-5;
  bad.dt_grad = 1e-5;
  CHECK_THROWS_AS(simulate(b.tl, p, {}, bad), Error);
  CHECK_THROWS_AS(simulate(b.tl, Phantom{}, {}, cfg), Error);
}

TEST_CASE("steady states")
{
  Phantom const p = one(make_spin(0, 0, 0, 0.5F, 1e-3F));
  CHECK(steady_state_prepare(EventTimeline{}, p, {}, SimConfig{}, 0).mz[0] == 1.0);

  // T2 << TR leaves no transverse coherence: Ernst steady state.
  double const tr = 50e-3, alpha = 40.0;
  Builder      gre;
  gre.hard(alpha, 20e-6);
  gre.free(tr - 20e-6);
  for (auto k : kernels()) {
    MagState const s = steady_state_prepare(gre.tl, p, {}, config(k), 200);
    double const   e1 = std::exp(-tr / double(0.5F));
    double const   ernst = (1 - e1) / (1 - e1 * std::cos(deg_to_rad(alpha)));
    CHECK(s.mz[0] == doctest::Approx(ernst).epsilon(0.01));
  }

  // On-resonance bSSFP with alternating phase; check just before a pulse.
  Phantom const q = one(make_spin(0, 0, 0, 0.5F, 0.1F));
  double const  trb = 5e-3, a = 60.0, d = 10e-6;
  Builder       ssfp;
  ssfp.hard(a, d);
  ssfp.free(trb - d);
  ssfp.hard(a, d, 180);
  ssfp.free(trb - d);
  for (auto k : kernels()) {
    MagState const s = steady_state_prepare(ssfp.tl, q, {}, config(k), 1000);
    double const   e1 = std::exp(-trb / double(0.5F)), e2 = std::exp(-trb / double(0.1F));
    double const   ca = std::cos(deg_to_rad(a)), sa = std::sin(deg_to_rad(a));
    double const   post = (1 - e1) * sa / (1 - (e1 - e2) * ca - e1 * e2);
    CHECK(std::hypot(s.mx[0], s.my[0]) == doctest::Approx(post * e2).epsilon(0.02));
    CHECK(s.time == doctest::Approx(1000 * 2 * trb));
  }
}
