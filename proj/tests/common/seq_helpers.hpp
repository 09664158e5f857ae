#pragma once

// Helpers for checking how document edits propagate into flattened events.

#include "mrseq/seq.hpp"

#include <cmath>
#include <regex>

namespace testing_helpers {

using namespace mrseq::seq;

inline Block const *resolve(SequenceDoc const &doc, std::string const &origin)
{
  static std::regex const top(R"(^\.blocks\[(\d+)\]$)");
  static std::regex const grp(R"(^\.groups\[(\d+)\]\.blocks\[(\d+)\]$)");
  std::smatch m;
  if (std::regex_match(origin, m, top)) { return &doc.blocks.at(std::stoul(m[1])); }
  if (std::regex_match(origin, m, grp)) { return &doc.groups.at(std::stoul(m[1])).blocks.at(std::stoul(m[2])); }
  return nullptr;
}

inline std::vector<Expression const *> expressions_of(Block const &b)
{
  return std::visit(
    [](auto const &x) -> std::vector<Expression const *> {
      using T = std::decay_t<decltype(x)>;
      if constexpr (std::is_same_v<T, RfPulse>) {
        return {&x.flip_angle, &x.duration, &x.freq_offset, &x.phase, &x.sinc_lobes, &x.slice_grad_amp};
      } else if constexpr (std::is_same_v<T, Gradient>) {
        return {&x.gx, &x.gy, &x.gz, &x.flat_duration, &x.rise_time};
      } else if constexpr (std::is_same_v<T, Delay>) {
        return {&x.duration};
      } else if constexpr (std::is_same_v<T, Readout>) {
        return {&x.samples, &x.duration, &x.read_grad_amp, &x.line_tag};
      } else if constexpr (std::is_same_v<T, EpiAcq>) {
        return {&x.n_lines, &x.samples_per_line, &x.fov};
      } else {
        return {&x.repetitions};
      }
    },
    b);
}

// Event content with absolute time removed. Durations come from differences
// of absolute times, so they are compared to rounding.
inline bool same_content(Event const &a, Event const &b)
{
  return std::abs(a.duration() - b.duration()) <= 1e-12 * std::max(1.0, a.t_end) && a.rf == b.rf && a.g0 == b.g0 &&
         a.g1 == b.g1 && a.adc == b.adc && a.origin == b.origin;
}

struct Propagation
{
  int changed = 0;  // events whose content differs
  int stray = 0;    // changed although their block does not depend on the variable
  int missed = 0;   // unchanged although their block's field values change
  bool same_shape = true;
};

// True when some field of `b` evaluates differently under the two scopes for
// any loop counter value in [0, 16).
inline bool values_differ(Block const &b, SequenceDoc const &x, SequenceDoc const &y)
{
  for (int r = 0; r < 16; ++r) {
    mrseq::expr::Bindings rep{{"rep", double(r)}};
    for (auto const &g : x.groups) { rep.push_back({"rep_" + g.name, double(r)}); }
    for (auto const *e : expressions_of(b)) {
      auto value = [&](SequenceDoc const &d) {
        try {
          return mrseq::expr::evaluate(*e, d.variables, rep);
        } catch (mrseq::Error const &) {
          return std::nan("");
        }
      };
      double const u = value(x), v = value(y);
      if (u != v && !(std::isnan(u) && std::isnan(v))) { return true; }
    }
  }
  return false;
}

// Flattens `base` and a copy with `var` scaled by `factor`, then compares event by event.
inline Propagation propagate(SequenceDoc const &base, std::string const &var, double factor)
{
  SequenceDoc  edited = base;
  double const v = mrseq::expr::evaluate(*base.variables.find(var), base.variables);
  edited.variables.set(var, Expression(mrseq::expr::format_number(v * factor)));
  auto const  a = flatten(base);
  auto const  b = flatten(edited);
  Propagation out;
  if (a.events.size() != b.events.size()) {
    out.same_shape = false;
    return out;
  }
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    Block const *blk = resolve(base, a.events[i].origin);
    bool         depends = false;
    for (auto const *e : blk ? expressions_of(*blk) : std::vector<Expression const *>{}) {
      depends = depends || mrseq::expr::transitive_identifiers(*e, base.variables).contains(var);
    }
    bool const differs = !same_content(a.events[i], b.events[i]);
    out.changed += differs;
    out.stray += differs && !depends;
    out.missed += !differs && depends && values_differ(*blk, base, edited);
  }
  return out;
}

} // namespace testing_helpers
