#include "kernels.hpp"

#include "mrseq/bloch.hpp"
#include "mrseq/constants.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

namespace mrseq::bloch {

using phantom::Phantom;
using seq::Event;
using seq::EventTimeline;

NonFiniteState::NonFiniteState(std::size_t spin, double time)
  : Error(fmt::format("non-finite magnetisation for spin {} at t = {} s", spin, time))
  , spin_(spin)
  , time_(time)
{
}

MagState MagState::equilibrium(std::size_t n)
{
  MagState s;
  s.mx.assign(n, 0.0);
  s.my.assign(n, 0.0);
  s.mz.assign(n, 1.0);
  return s;
}

bool avx2_available()
{
#if defined(MRSEQ_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

KernelKind resolve_kernel(KernelKind requested)
{
  if (requested == KernelKind::automatic) {
    if (char const *env = std::getenv("MRSEQ_KERNEL")) {
      std::string_view const v(env);
      if (v == "scalar") { return KernelKind::scalar; }
      if (v == "avx2") { requested = KernelKind::avx2; }
    }
  }
  if (requested == KernelKind::avx2 && !avx2_available()) { throw Error("AVX2 kernel requested but not supported by this CPU"); }
  if (requested == KernelKind::automatic) { return avx2_available() ? KernelKind::avx2 : KernelKind::scalar; }
  return requested;
}

char const *to_string(KernelKind k)
{
  switch (k) {
  case KernelKind::automatic: return "auto";
  case KernelKind::scalar: return "scalar";
  case KernelKind::avx2: return "avx2";
  }
  return "auto";
}

namespace {

constexpr std::size_t kChunk = 1024;

detail::Kernels const &kernels_for(KernelKind k)
{
#if defined(MRSEQ_HAVE_AVX2)
  if (k == KernelKind::avx2) { return detail::avx2_kernels; }
#endif
  (void)k;
  return detail::scalar_kernels;
}

struct Plan
{
  seq::RfWave           rf;
  std::array<double, 3> g0, g1;
  double                h = 0.0;
  std::vector<double>   bx, by, gx, gy, gz, tm;

  detail::RfPlan view(std::size_t first, std::size_t count) const
  {
    return {h, count, bx.data() + first, by.data() + first, gx.data() + first, gy.data() + first, gz.data() + first, tm.data() + first};
  }
};

Plan make_plan(Event const &e, double dt_rf)
{
  Plan p;
  p.rf = *e.rf;
  p.g0 = e.g0;
  p.g1 = e.g1;
  double const d = e.rf->duration;
  std::size_t const n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(d / dt_rf - 1e-9)));
  p.h = d / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    double const t = (static_cast<double>(k) + 0.5) * p.h;
    auto const   b1 = e.rf->b1(t);
    p.tm.push_back(t);
    p.bx.push_back(b1.real());
    p.by.push_back(b1.imag());
    double const f = t / d;
    p.gx.push_back(e.g0[0] + (e.g1[0] - e.g0[0]) * f);
    p.gy.push_back(e.g0[1] + (e.g1[1] - e.g0[1]) * f);
    p.gz.push_back(e.g0[2] + (e.g1[2] - e.g0[2]) * f);
  }
  return p;
}

detail::FreeSeg free_seg(Event const &e, double a, double b)
{
  detail::FreeSeg s{a, b, {}, {}, {}};
  double const d = e.duration();
  for (int ax = 0; ax < 3; ++ax) {
    double const slope = d > 0.0 ? (e.g1[ax] - e.g0[ax]) / d : 0.0;
    s.ga[ax] = e.g0[ax] + slope * a;
    s.gm[ax] = e.g0[ax] + slope * 0.5 * (a + b);
    s.gb[ax] = e.g0[ax] + slope * b;
  }
  return s;
}

// Shared read-only description of one run.
struct Run
{
  EventTimeline const        &tl;
  Phantom const              &ph;
  detail::Kernels const      &k;
  std::vector<Plan>           plans;
  std::vector<int>            plan_of;  // per event, -1 without RF
  std::vector<std::size_t>    sample_offset;  // per event
  std::vector<std::uint64_t>  weight;  // per event, for progress
  std::size_t                 total_samples = 0;
  int                         repeats = 1;
  bool                        acquire = true;
  double                      t_offset = 0.0;
  MagState                   *state = nullptr;
  std::atomic<bool> const    *cancel = nullptr;

  bool control_cancelled() const { return cancel && cancel->load(std::memory_order_relaxed); }
};

struct Progress
{
  RunControl const          &control;
  std::uint64_t              total = 1;
  std::atomic<std::uint64_t> done{0};
  std::mutex                 mutex;
  double                     last = 0.0;

  void add(std::uint64_t w)
  {
    std::uint64_t const now = done.fetch_add(w) + w;
    if (!control.progress) { return; }
    std::scoped_lock lock(mutex);
    double const     f = std::min(1.0, static_cast<double>(now) / static_cast<double>(total));
    if (f >= last + 0.005) {
      last = f;
      control.progress(f);
    }
  }

  void finish()
  {
    if (!control.progress) { return; }
    std::scoped_lock lock(mutex);
    last = 1.0;
    control.progress(1.0);
  }
};

class Chunk
{
public:
  Chunk(Run const &run, std::size_t first, std::size_t count)
    : run_(run)
    , first_(first)
    , n_(count)
  {
    std::size_t const padded = (count + 3) & ~std::size_t(3);
    for (auto *v : {&mx_, &my_, &px_, &py_, &pz_, &vx_, &vy_, &vz_, &dw_, &r1_, &r2_, &pd_, &pd_eff_}) { v->assign(padded, 0.0); }
    mz_.assign(padded, 1.0);
    for (std::size_t i = 0; i < count; ++i) {
      auto const &s = run.ph.spins[first + i];
      px_[i] = s.r0[0];
      py_[i] = s.r0[1];
      pz_[i] = s.r0[2];
      dw_[i] = s.delta_omega;
      r1_[i] = 1.0 / static_cast<double>(s.t1);
      r2_[i] = 1.0 / static_cast<double>(s.t2);
      pd_[i] = s.pd;
      if (s.motion_id >= 0) {
        auto const &m = run.ph.motion[static_cast<std::size_t>(s.motion_id)];
        vx_[i] = m.v[0];
        vy_[i] = m.v[1];
        vz_[i] = m.v[2];
        moving_.push_back(i);
      }
      if (run.state) {
        mx_[i] = run.state->mx[first + i];
        my_[i] = run.state->my[first + i];
        mz_[i] = run.state->mz[first + i];
      }
    }
    pd_eff_ = pd_;
    view_ = {mx_.data(), my_.data(), mz_.data(), px_.data(), py_.data(), pz_.data(), vx_.data(), vy_.data(), vz_.data(),
             dw_.data(), r1_.data(), r2_.data(), pd_eff_.data(), padded};
    if (run.acquire) { acc_.assign(run.total_samples, 0.0); }
  }

  void execute(Progress &progress, std::atomic<bool> const &abort)
  {
    double const total = run_.tl.total_duration;
    for (int rep = 0; rep < run_.repeats; ++rep) {
      double const offset = run_.t_offset + rep * total;
      for (std::size_t ei = 0; ei < run_.tl.events.size(); ++ei) {
        if (abort.load(std::memory_order_relaxed)) { return; }
        if (run_.control_cancelled()) { throw Cancelled(); }
        event(ei, offset);
        progress.add(run_.weight[ei]);
      }
    }
  }

  void store_state() const
  {
    for (std::size_t i = 0; i < n_; ++i) {
      run_.state->mx[first_ + i] = mx_[i];
      run_.state->my[first_ + i] = my_[i];
      run_.state->mz[first_ + i] = mz_[i];
    }
  }

  std::vector<std::complex<double>> &signal() { return acc_; }

private:
  struct Saved
  {
    std::size_t         i;
    double              mx, my, mz;
    std::vector<double> wraps;  // relative to event start
  };

  void event(std::size_t ei, double offset)
  {
    Event const &e = run_.tl.events[ei];
    double const a_abs = offset + e.t_start;
    double const d = e.duration();

    slow_.clear();
    for (std::size_t i : moving_) {
      auto const &spin = run_.ph.spins[first_ + i];
      auto        wraps = phantom::wrap_events(spin, run_.ph.motion, a_abs, a_abs + d);
      if (wraps.empty()) {
        set_position(i, a_abs, 0.5 * d);
        continue;
      }
      for (double &w : wraps) { w -= a_abs; }
      slow_.push_back({i, mx_[i], my_[i], mz_[i], std::move(wraps)});
      pd_eff_[i] = 0.0;
    }

    int const plan = run_.plan_of[ei];
    if (plan >= 0) {
      Plan const &p = run_.plans[static_cast<std::size_t>(plan)];
      run_.k.rf(view_, p.view(0, p.tm.size()));
      for (auto const &s : slow_) { slow_rf(s, p, a_abs); }
    } else if (e.adc) {
      adc_event(e, ei, a_abs);
    } else {
      run_.k.free(view_, free_seg(e, 0.0, d));
      for (auto const &s : slow_) {
        restore(s);
        slow_free(s, e, a_abs, 0.0, d);
      }
    }
    for (auto const &s : slow_) { pd_eff_[s.i] = pd_[s.i]; }

    for (std::size_t i = 0; i < n_; ++i) {
      if (!std::isfinite(mx_[i]) || !std::isfinite(my_[i]) || !std::isfinite(mz_[i])) { throw NonFiniteState(first_ + i, a_abs + d); }
    }
  }

  void adc_event(Event const &e, std::size_t ei, double a_abs)
  {
    int const    n = e.adc->n_samples;
    double const d = e.duration();
    auto         t_of = [&](int j) { return (j + 0.5) * d / n; };
    std::size_t const base = run_.sample_offset[ei];

    double a = 0.0;
    for (int j = 0; j < n; ++j) {
      double const b = t_of(j);
      run_.k.free(view_, free_seg(e, a, b));
      if (run_.acquire) { acc_[base + j] += run_.k.sum(view_); }
      a = b;
    }
    run_.k.free(view_, free_seg(e, a, d));

    for (auto const &s : slow_) {
      restore(s);
      double const pd = pd_[s.i];
      a = 0.0;
      for (int j = 0; j < n; ++j) {
        double const b = t_of(j);
        slow_free(s, e, a_abs, a, b);
        if (run_.acquire) { acc_[base + j] += std::complex<double>(pd * mx_[s.i], pd * my_[s.i]); }
        a = b;
      }
      slow_free(s, e, a_abs, a, d);
    }
  }

  void restore(Saved const &s)
  {
    mx_[s.i] = s.mx;
    my_[s.i] = s.my;
    mz_[s.i] = s.mz;
  }

  // Position branch valid around event-relative time `t_rel`.
  void set_position(std::size_t i, double a_abs, double t_rel)
  {
    auto const &spin = run_.ph.spins[first_ + i];
    auto const  r = phantom::position_at(spin, run_.ph.motion, a_abs + t_rel);
    px_[i] = r[0] - vx_[i] * t_rel;
    py_[i] = r[1] - vy_[i] * t_rel;
    pz_[i] = r[2] - vz_[i] * t_rel;
  }

  void wrap(std::size_t i)
  {
    auto const &spin = run_.ph.spins[first_ + i];
    if (run_.ph.motion[static_cast<std::size_t>(spin.motion_id)].reset_on_wrap) {
      mx_[i] = 0.0;
      my_[i] = 0.0;
      mz_[i] = 1.0;
    }
  }

  detail::Spins one(std::size_t i) const
  {
    detail::Spins s = view_.slice(i, 1);
    s.pd = pd_.data() + i;
    return s;
  }

  // Free precession of one wrapping spin over [a, b], split at its wraps.
  void slow_free(Saved const &s, Event const &e, double a_abs, double a, double b)
  {
    auto const &sk = detail::scalar_kernels;
    double      t = a;
    for (double w : s.wraps) {
      if (w <= a || w > b) { continue; }
      if (w > t) {
        set_position(s.i, a_abs, 0.5 * (t + w));
        sk.free(one(s.i), free_seg(e, t, w));
      }
      wrap(s.i);
      t = w;
    }
    if (b > t) {
      set_position(s.i, a_abs, 0.5 * (t + b));
      sk.free(one(s.i), free_seg(e, t, b));
    }
  }

  // RF steps of one wrapping spin; a wrap takes effect at the first step
  // whose midpoint follows it.
  void slow_rf(Saved const &s, Plan const &p, double a_abs)
  {
    restore(s);
    auto const &sk = detail::scalar_kernels;
    std::size_t k = 0;
    std::size_t const steps = p.tm.size();
    for (std::size_t wi = 0; wi <= s.wraps.size(); ++wi) {
      std::size_t end = steps;
      if (wi < s.wraps.size()) {
        end = static_cast<std::size_t>(std::upper_bound(p.tm.begin(), p.tm.end(), s.wraps[wi]) - p.tm.begin());
      }
      if (end > k) {
        set_position(s.i, a_abs, p.tm[k]);
        sk.rf(one(s.i), p.view(k, end - k));
        k = end;
      }
      if (wi < s.wraps.size()) { wrap(s.i); }
    }
  }

  Run const                        &run_;
  std::size_t                       first_, n_;
  std::vector<double>               mx_, my_, mz_, px_, py_, pz_, vx_, vy_, vz_, dw_, r1_, r2_, pd_, pd_eff_;
  std::vector<std::size_t>          moving_;
  std::vector<Saved>                slow_;
  detail::Spins                     view_{};
  std::vector<std::complex<double>> acc_;
};

using Signal = std::vector<std::complex<double>>;

// Pairwise sum over chunks [lo, hi) in index order.
Signal tree_sum(std::vector<Signal> &parts, std::size_t lo, std::size_t hi)
{
  if (hi - lo == 1) { return std::move(parts[lo]); }
  std::size_t const mid = lo + (hi - lo) / 2;
  Signal            a = tree_sum(parts, lo, mid);
  Signal const      b = tree_sum(parts, mid, hi);
  for (std::size_t j = 0; j < a.size(); ++j) { a[j] += b[j]; }
  return a;
}

void check_config(SimConfig const &cfg)
{
  if (!(cfg.dt_rf > 0.0) || !std::isfinite(cfg.dt_rf)) { throw Error("dt_rf must be positive"); }
  if (!(cfg.dt_grad >= cfg.dt_rf) || !std::isfinite(cfg.dt_grad)) { throw Error("dt_grad must be finite and at least dt_rf"); }
  if (cfg.threads < 0) { throw Error("threads must be >= 0"); }
}

Signal execute(Run &run, SimConfig const &cfg, RunControl const &control)
{
  std::size_t const n_spins = run.ph.spins.size();
  std::size_t const n_chunks = (n_spins + kChunk - 1) / kChunk;

  Progress      progress{control, 1, {0}, {}, 0.0};
  std::uint64_t per_pass = 0;
  for (auto w : run.weight) { per_pass += w; }
  progress.total = std::max<std::uint64_t>(1, per_pass * n_chunks * static_cast<std::uint64_t>(std::max(run.repeats, 0)));

  std::vector<Signal> parts(n_chunks);
  std::atomic<std::size_t> next{0};
  std::atomic<bool>        abort{false};
  std::exception_ptr       failure;
  std::mutex               failure_mutex;

  auto worker = [&] {
    for (;;) {
      std::size_t const c = next.fetch_add(1);
      if (c >= n_chunks || abort.load()) { return; }
      try {
        std::size_t const first = c * kChunk;
        Chunk             chunk(run, first, std::min(kChunk, n_spins - first));
        chunk.execute(progress, abort);
        if (run.state) { chunk.store_state(); }
        parts[c] = std::move(chunk.signal());
      } catch (...) {
        std::scoped_lock lock(failure_mutex);
        if (!failure) { failure = std::current_exception(); }
        abort = true;
        return;
      }
    }
  };

  unsigned const hw = std::max(1U, std::thread::hardware_concurrency());
  std::size_t const want = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw;
  std::size_t const n_workers = std::max<std::size_t>(1, std::min(want, n_chunks));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) { pool.emplace_back(worker); }
  }
  if (failure) { std::rethrow_exception(failure); }
  progress.finish();
  if (!run.acquire || n_chunks == 0) { return Signal(run.total_samples); }
  return tree_sum(parts, 0, n_chunks);
}

Run prepare(EventTimeline const &tl, Phantom const &ph, SimConfig const &cfg, detail::Kernels const &k)
{
  Run run{tl, ph, k, {}, {}, {}, {}, 0, 1, true, 0.0, nullptr, nullptr};
  for (auto const &e : tl.events) {
    run.sample_offset.push_back(run.total_samples);
    int           plan = -1;
    std::uint64_t w = 1;
    if (e.rf) {
      if (e.adc) { throw Error("ADC during RF is not supported", e.origin); }
      for (std::size_t p = 0; p < run.plans.size(); ++p) {
        if (run.plans[p].rf == *e.rf && run.plans[p].g0 == e.g0 && run.plans[p].g1 == e.g1) { plan = static_cast<int>(p); }
      }
      if (plan < 0) {
        run.plans.push_back(make_plan(e, cfg.dt_rf));
        plan = static_cast<int>(run.plans.size() - 1);
      }
      w += run.plans[static_cast<std::size_t>(plan)].tm.size();
    }
    if (e.adc) {
      run.total_samples += static_cast<std::size_t>(e.adc->n_samples);
      w += static_cast<std::uint64_t>(e.adc->n_samples);
    }
    run.plan_of.push_back(plan);
    run.weight.push_back(w);
  }
  return run;
}

void check_inputs(Phantom const &ph, MagState const *state)
{
  if (ph.spins.empty()) { throw Error("phantom has no spins"); }
  phantom::check(ph);
  if (state && (state->mx.size() != ph.spins.size() || state->my.size() != ph.spins.size() || state->mz.size() != ph.spins.size())) {
    throw Error(fmt::format("state holds {} spins, phantom has {}", state->size(), ph.spins.size()));
  }
}

} // namespace

RawAcquisition simulate(EventTimeline const &tl, Phantom const &ph, seq::Scanner const &, SimConfig const &cfg,
                        RunControl const &control, MagState *state)
{
  check_config(cfg);
  check_inputs(ph, state);
  Run run = prepare(tl, ph, cfg, kernels_for(resolve_kernel(cfg.kernel)));
  run.state = state;
  run.cancel = control.cancel;
  run.t_offset = state ? state->time : 0.0;

  RawAcquisition out;
  out.samples = execute(run, cfg, control);
  if (state) { state->time += tl.total_duration; }

  // The receiver is phase-locked to the transmitter: samples are demodulated
  // by the phase of the latest RF pulse.
  std::set<int> lengths;
  double        rx = 0.0;
  std::size_t   at = 0;
  for (auto const &e : tl.events) {
    if (e.rf) { rx = e.rf->phase; }
    if (!e.adc) { continue; }
    if (rx != 0.0 && !out.samples.empty()) {
      auto const turn = std::polar(1.0, -rx);
      for (int i = 0; i < e.adc->n_samples; ++i) { out.samples[at + std::size_t(i)] *= turn; }
    }
    at += std::size_t(e.adc->n_samples);
    for (int i = 0; i < e.adc->n_samples; ++i) { out.sample_times.push_back(e.sample_time(i)); }
    out.line_tags.push_back(e.adc->line_tag);
    out.layout.reversed.push_back(e.adc->reversed);
    lengths.insert(e.adc->n_samples);
  }
  out.layout.n_lines = static_cast<int>(out.line_tags.size());
  out.layout.samples_per_line = lengths.size() == 1 ? *lengths.begin() : 0;
  return out;
}

MagState steady_state_prepare(EventTimeline const &tr, Phantom const &ph, seq::Scanner const &, SimConfig const &cfg, int n_dummy,
                              RunControl const &control)
{
  check_config(cfg);
  check_inputs(ph, nullptr);
  if (n_dummy < 0) { throw Error("n_dummy must be >= 0"); }
  MagState state = MagState::equilibrium(ph.spins.size());
  if (n_dummy == 0) { return state; }
  Run run = prepare(tr, ph, cfg, kernels_for(resolve_kernel(cfg.kernel)));
  run.state = &state;
  run.cancel = control.cancel;
  run.repeats = n_dummy;
  run.acquire = false;
  execute(run, cfg, control);
  state.time = n_dummy * tr.total_duration;
  return state;
}

} // namespace mrseq::bloch
