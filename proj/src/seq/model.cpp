#include "mrseq/constants.hpp"
#include "mrseq/seq.hpp"

#include <cmath>

namespace mrseq::seq {

char const *to_string(Axis a)
{
  switch (a) {
  case Axis::x: return "x";
  case Axis::y: return "y";
  case Axis::z: return "z";
  }
  return "?";
}

char const *to_string(RfShape s) { return s == RfShape::hard ? "hard" : "sinc"; }

std::optional<Axis> parse_axis(std::string_view s)
{
  if (s == "x") { return Axis::x; }
  if (s == "y") { return Axis::y; }
  if (s == "z") { return Axis::z; }
  return std::nullopt;
}

GroupDef const *SequenceDoc::find_group(std::string_view name) const
{
  for (auto const &g : groups) {
    if (g.name == name) { return &g; }
  }
  return nullptr;
}

double RfWave::envelope(double tau) const
{
  if (shape == RfShape::hard) { return 1.0; }
  double const c = tau - 0.5 * duration;
  double const u = c * (lobes + 1) / duration;
  double const sinc = u == 0.0 ? 1.0 : std::sin(kPi * u) / (kPi * u);
  double const hann = 0.5 * (1.0 + std::cos(2.0 * kPi * c / duration));
  return sinc * hann;
}

std::complex<double> RfWave::b1(double tau) const
{
  double const arg = phase - 2.0 * kPi * freq_offset * (tau - 0.5 * duration);
  return amplitude * envelope(tau) * std::complex<double>(std::cos(arg), std::sin(arg));
}

double RfWave::bandwidth() const { return shape == RfShape::hard ? 1.0 / duration : (lobes + 1) / duration; }

std::array<double, 3> Event::grad_at(double t) const
{
  double const d = duration();
  double const w = d > 0.0 ? (t - t_start) / d : 0.0;
  return {g0[0] + (g1[0] - g0[0]) * w, g0[1] + (g1[1] - g0[1]) * w, g0[2] + (g1[2] - g0[2]) * w};
}

std::size_t EventTimeline::adc_events() const
{
  std::size_t n = 0;
  for (auto const &e : events) { n += e.adc ? 1 : 0; }
  return n;
}

std::size_t EventTimeline::adc_samples() const
{
  std::size_t n = 0;
  for (auto const &e : events) { n += e.adc ? static_cast<std::size_t>(e.adc->n_samples) : 0; }
  return n;
}

FlattenError::FlattenError(std::string path, std::string kind, std::string message)
  : Error(path.empty() ? message : path + ": " + message, path)
  , kind_(std::move(kind))
  , message_(std::move(message))
{
}

} // namespace mrseq::seq
