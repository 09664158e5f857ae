#pragma once

// Block-by-block sequence documents and their flattened event timelines.

#include "mrseq/error.hpp"
#include "mrseq/expr.hpp"

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mrseq::seq {

using expr::Expression;

enum class Axis { x = 0, y = 1, z = 2 };
enum class RfShape { hard, sinc };

char const          *to_string(Axis a);
char const          *to_string(RfShape s);
std::optional<Axis>  parse_axis(std::string_view s);

struct Scanner
{
  double b0 = 1.5;             // T
  double max_rf_amp = 50e-6;   // T
  double max_grad = 40e-3;     // T/m
  double max_slew = 150.0;     // T/m/s
  double adc_dead_time = 0.0;  // s, minimum gap between RF end and ADC start

  friend bool operator==(Scanner const &, Scanner const &) = default;
};

struct RfPulse
{
  std::string         label;
  RfShape             shape = RfShape::hard;
  Expression          flip_angle;  // degrees
  Expression          duration;
  Expression          freq_offset;  // Hz
  Expression          phase;        // degrees
  Expression          sinc_lobes{"3"};
  std::optional<Axis> slice_grad_axis;
  Expression          slice_grad_amp;

  friend bool operator==(RfPulse const &, RfPulse const &) = default;
};

struct Gradient
{
  std::string label;
  Expression  gx, gy, gz;
  Expression  flat_duration;
  Expression  rise_time;  // 0 derives the ramp from max_slew

  friend bool operator==(Gradient const &, Gradient const &) = default;
};

struct Delay
{
  std::string label;
  Expression  duration;

  friend bool operator==(Delay const &, Delay const &) = default;
};

// ADC window over the flat top of a read gradient; ramps come on top of
// `duration` and are not sampled.
struct Readout
{
  std::string label;
  Expression  samples;
  Expression  duration;
  Axis        read_grad_axis = Axis::x;
  Expression  read_grad_amp;
  Expression  line_tag;

  friend bool operator==(Readout const &, Readout const &) = default;
};

struct EpiAcq
{
  std::string label;
  Expression  n_lines;
  Expression  samples_per_line;
  Expression  fov;
  Axis        read_axis = Axis::x;
  Axis        phase_axis = Axis::y;

  friend bool operator==(EpiAcq const &, EpiAcq const &) = default;
};

struct GroupRef
{
  std::string label;
  std::string group_name;
  Expression  repetitions{"1"};

  friend bool operator==(GroupRef const &, GroupRef const &) = default;
};

using Block = std::variant<RfPulse, Gradient, Delay, Readout, EpiAcq, GroupRef>;

struct GroupDef
{
  std::string        name;
  std::vector<Block> blocks;

  friend bool operator==(GroupDef const &, GroupDef const &) = default;
};

struct SequenceDoc
{
  std::string           description;
  Scanner               scanner;
  expr::VariableScope   variables;
  std::vector<GroupDef> groups;
  std::vector<Block>    blocks;

  GroupDef const *find_group(std::string_view name) const;

  friend bool operator==(SequenceDoc const &, SequenceDoc const &) = default;
};

// Evaluated RF waveform. B1(τ) = amplitude · shape(τ) · exp(i(phase − 2π·freq_offset·(τ − duration/2)))
// for τ in [0, duration], so a spin at slice position freq_offset/(γ̄G) sees a
// stationary field.
struct RfWave
{
  RfShape shape = RfShape::hard;
  double  amplitude = 0.0;  // T, peak of the envelope
  double  duration = 0.0;
  double  phase = 0.0;  // rad
  double  freq_offset = 0.0;  // Hz
  int     lobes = 3;

  double               envelope(double tau) const;
  std::complex<double> b1(double tau) const;
  double               bandwidth() const;

  friend bool operator==(RfWave const &, RfWave const &) = default;
};

struct Adc
{
  int  n_samples = 0;
  int  line_tag = 0;
  bool reversed = false;

  friend bool operator==(Adc const &, Adc const &) = default;
};

// One piecewise-linear interval. An RF waveform spans the whole event.
struct Event
{
  double                t_start = 0.0;
  double                t_end = 0.0;
  std::optional<RfWave> rf;
  std::array<double, 3> g0{};  // gradient at t_start, T/m
  std::array<double, 3> g1{};  // gradient at t_end
  std::optional<Adc>    adc;
  std::string           origin;  // document path of the producing block

  double duration() const { return t_end - t_start; }
  double sample_time(int i) const { return t_start + (i + 0.5) * duration() / adc->n_samples; }
  std::array<double, 3> grad_at(double t) const;

  friend bool operator==(Event const &, Event const &) = default;
};

struct EventTimeline
{
  std::vector<Event> events;
  double             total_duration = 0.0;

  std::size_t adc_events() const;
  std::size_t adc_samples() const;

  friend bool operator==(EventTimeline const &, EventTimeline const &) = default;
};

// Error found while resolving a document; `path` names the block field.
class FlattenError : public Error
{
public:
  FlattenError(std::string path, std::string kind, std::string message);
  std::string const &kind() const noexcept { return kind_; }
  std::string const &message() const noexcept { return message_; }

private:
  std::string kind_;
  std::string message_;
};

struct Violation
{
  std::string         path;  // ".blocks[2].flip_angle"
  std::string         kind;  // rf_amplitude, grad_amplitude, slew, negative_duration, adc_in_rf,
                             // adc_dead_time, expression, invalid_value, unknown_group, cyclic_group
  std::optional<Axis> axis;
  std::string         message;

  friend bool operator==(Violation const &, Violation const &) = default;
};

EventTimeline          flatten(SequenceDoc const &doc);
std::vector<Violation> validate(SequenceDoc const &doc);

// Numeric EPI block parameters.
struct EpiParams
{
  int    n_lines = 0;
  int    samples_per_line = 0;
  double fov = 0.0;
  Axis   read_axis = Axis::x;
  Axis   phase_axis = Axis::y;
};

// Prephaser, then alternating readouts separated by triangular phase blips.
// Throws FlattenError (kind "invalid_value" or "slew") on bad parameters.
std::vector<Block> expand_epi(EpiParams const &p, Scanner const &scanner);
std::vector<Block> expand_epi(EpiAcq const &block, SequenceDoc const &doc);

struct PlotSeries
{
  std::vector<double> t, rf_mag, rf_phase, gx, gy, gz, adc_mask;
};

PlotSeries diagram_series(EventTimeline const &tl, double dt_plot);

// JSON sequence file, "mrseq_version": 1.
SequenceDoc load_sequence(std::string_view bytes);
std::string save_sequence(SequenceDoc const &doc);

// Bundled worked examples by name: ge_epi, spin_echo, bssfp, tof_epi, tof_bssfp.
std::vector<std::string> example_names();
std::string              example_source(std::string_view name);
SequenceDoc              example(std::string_view name);

} // namespace mrseq::seq
