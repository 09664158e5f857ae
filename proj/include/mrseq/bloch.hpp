#pragma once

// Bloch simulation of a phantom over an event timeline.

#include "mrseq/error.hpp"
#include "mrseq/phantom.hpp"
#include "mrseq/seq.hpp"

#include <atomic>
#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace mrseq::bloch {

enum class KernelKind { automatic, scalar, avx2 };

struct SimConfig
{
  double     dt_rf = 1e-6;  // s, step cap while RF plays
  double     dt_grad = 10e-6;  // s, step cap elsewhere; closed-form steps never exceed it in error
  int        threads = 0;  // 0 = hardware concurrency
  KernelKind kernel = KernelKind::automatic;

  friend bool operator==(SimConfig const &, SimConfig const &) = default;
};

// Per-spin magnetisation normalised to m0 = 1; `time` is the absolute time
// the state refers to, so motion continues across calls.
struct MagState
{
  std::vector<double> mx, my, mz;
  double              time = 0.0;

  static MagState equilibrium(std::size_t n);
  std::size_t     size() const { return mz.size(); }
};

struct Layout
{
  int               n_lines = 0;
  int               samples_per_line = 0;  // 0 when ADC events differ in length
  std::vector<bool> reversed;  // per ADC event
};

struct RawAcquisition
{
  std::vector<std::complex<double>> samples;
  std::vector<double>               sample_times;
  std::vector<int>                  line_tags;  // per ADC event
  Layout                            layout;
};

class NonFiniteState : public Error
{
public:
  NonFiniteState(std::size_t spin, double time);
  std::size_t spin() const noexcept { return spin_; }
  double      time() const noexcept { return time_; }

private:
  std::size_t spin_;
  double      time_;
};

struct RunControl
{
  std::function<void(double)> progress;  // called with non-decreasing fractions, last call 1.0
  std::atomic<bool> const    *cancel = nullptr;  // checked between events; raises Cancelled
};

bool        avx2_available();
KernelKind  resolve_kernel(KernelKind requested);  // applies MRSEQ_KERNEL to `automatic`
char const *to_string(KernelKind k);

// `state`, when given, supplies the initial magnetisation and receives the
// final one; otherwise every spin starts at equilibrium at t = 0. Samples are
// demodulated by the phase of the most recent RF pulse.
RawAcquisition simulate(seq::EventTimeline const &tl, phantom::Phantom const &ph, seq::Scanner const &scanner,
                        SimConfig const &cfg, RunControl const &control = {}, MagState *state = nullptr);

// Plays `tr` n_dummy times without acquiring and returns the resulting state.
MagState steady_state_prepare(seq::EventTimeline const &tr, phantom::Phantom const &ph, seq::Scanner const &scanner,
                              SimConfig const &cfg, int n_dummy, RunControl const &control = {});

} // namespace mrseq::bloch
