#include "mrseq/constants.hpp"
#include "mrseq/seq.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace mrseq::seq {

namespace {

// Relative slack when comparing derived quantities against scanner limits.
constexpr double kLimitSlack = 1e-9;

Expression lit(double v) { return Expression(expr::format_number(v)); }

double envelope_integral(RfWave const &w)
{
  if (w.shape == RfShape::hard) { return w.duration; }
  // Composite Simpson; the envelope is smooth and vanishes at both ends.
  int const    n = 4096;
  double const h = w.duration / n;
  double       s = w.envelope(0.0) + w.envelope(w.duration);
  for (int i = 1; i < n; ++i) { s += (i % 2 ? 4.0 : 2.0) * w.envelope(i * h); }
  return s * h / 3.0;
}

bool fatal_kind(std::string_view kind)
{
  return kind != "rf_amplitude" && kind != "grad_amplitude" && kind != "adc_dead_time" && kind != "adc_in_rf";
}

class Walker
{
public:
  Walker(SequenceDoc const &doc, std::vector<Violation> *collect)
    : doc_(doc)
    , ev_(doc.variables)
    , out_(collect)
  {
  }

  void run()
  {
    check_document();
    for (std::size_t i = 0; i < doc_.blocks.size(); ++i) {
      walk(doc_.blocks[i], fmt::format(".blocks[{}]", i), false);
    }
    tl_.total_duration = t_;
  }

  EventTimeline take() { return std::move(tl_); }

private:
  void report(std::string path, std::string kind, std::optional<Axis> axis, std::string message)
  {
    if (!out_) {
      if (fatal_kind(kind)) { throw FlattenError(std::move(path), std::move(kind), std::move(message)); }
      return;
    }
    out_->push_back(Violation{std::move(path), std::move(kind), axis, std::move(message)});
  }

  void check_document()
  {
    auto const &s = doc_.scanner;
    std::pair<char const *, double> const limits[] = {
      {"b0", s.b0}, {"max_rf_amp", s.max_rf_amp}, {"max_grad", s.max_grad}, {"max_slew", s.max_slew}};
    for (auto const &[name, v] : limits) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        report(fmt::format(".scanner.{}", name), "invalid_value", std::nullopt, "must be positive");
      }
    }
    if (!(s.adc_dead_time >= 0.0)) {
      report(".scanner.adc_dead_time", "invalid_value", std::nullopt, "must not be negative");
    }

    std::set<std::string> names;
    for (std::size_t g = 0; g < doc_.groups.size(); ++g) {
      std::string const &name = doc_.groups[g].name;
      if (!expr::is_valid_name(name)) {
        report(fmt::format(".groups[{}].name", g), "invalid_value", std::nullopt, fmt::format("invalid group name '{}'", name));
      }
      if (!names.insert(name).second) {
        report(fmt::format(".groups[{}].name", g), "invalid_value", std::nullopt, fmt::format("duplicate group '{}'", name));
      }
    }
    auto const &entries = doc_.variables.entries();
    for (std::size_t v = 0; v < entries.size(); ++v) {
      std::string const &name = entries[v].first;
      if (name == "rep" || (name.starts_with("rep_") && names.contains(name.substr(4)))) {
        report(fmt::format(".variables[{}].name", v), "invalid_value", std::nullopt,
               fmt::format("variable '{}' shadows a loop counter", name));
      }
    }
    try {
      ev_.check_acyclic();
    } catch (expr::CyclicDependency const &e) {
      report(".variables", "expression", std::nullopt, e.what());
    }
  }

  std::string field(std::string const &path, char const *name, bool synthetic) const
  {
    return synthetic ? path : path + "." + name;
  }

  std::optional<double> num(Expression const &e, std::string path)
  {
    try {
      return ev_.evaluate(e, bindings_);
    } catch (expr::EvalError const &err) {
      report(std::move(path), "expression", std::nullopt, err.what());
      return std::nullopt;
    }
  }

  std::optional<long> integer(Expression const &e, std::string path, long min)
  {
    auto v = num(e, path);
    if (!v) { return std::nullopt; }
    double const r = std::round(*v);
    if (std::abs(*v - r) > 1e-9 * std::max(1.0, std::abs(r)) || std::abs(r) > 1e9) {
      report(std::move(path), "invalid_value", std::nullopt, fmt::format("expected an integer, got {}", *v));
      return std::nullopt;
    }
    if (r < min) {
      report(std::move(path), "invalid_value", std::nullopt, fmt::format("must be at least {}, got {}", min, r));
      return std::nullopt;
    }
    return static_cast<long>(r);
  }

  std::optional<double> duration(Expression const &e, std::string path)
  {
    auto v = num(e, path);
    if (v && *v < 0.0) {
      report(std::move(path), "negative_duration", std::nullopt, fmt::format("duration {} is negative", *v));
      return std::nullopt;
    }
    return v;
  }

  void check_amplitude(std::array<double, 3> const &g, std::string const &path, bool one_axis = false,
                       Axis axis = Axis::x)
  {
    for (int a = 0; a < 3; ++a) {
      if (std::abs(g[a]) > doc_.scanner.max_grad * (1 + kLimitSlack)) {
        Axis const ax = one_axis ? axis : static_cast<Axis>(a);
        report(path, "grad_amplitude", ax,
               fmt::format("|G{}| = {} T/m exceeds max_grad {}", to_string(ax), std::abs(g[a]), doc_.scanner.max_grad));
      }
    }
  }

  double derived_rise(std::array<double, 3> const &g) const
  {
    double m = 0.0;
    for (double v : g) { m = std::max(m, std::abs(v)); }
    return m / doc_.scanner.max_slew;
  }

  Event &emit(double d, std::array<double, 3> g0, std::array<double, 3> g1, std::string const &origin)
  {
    Event e;
    e.t_start = t_;
    e.t_end = t_ + d;
    e.g0 = g0;
    e.g1 = g1;
    e.origin = origin;
    t_ = e.t_end;
    if (d > 0.0) {
      tl_.events.push_back(std::move(e));
      return tl_.events.back();
    }
    scratch_ = std::move(e);
    return scratch_;
  }

  void trapezoid(std::array<double, 3> g, double rise, double flat, std::string const &origin)
  {
    emit(rise, {}, g, origin);
    emit(flat, g, g, origin);
    emit(rise, g, {}, origin);
  }

  void walk(Block const &b, std::string const &path, bool synthetic)
  {
    std::visit([&](auto const &x) { visit(x, path, synthetic); }, b);
  }

  void visit(RfPulse const &b, std::string const &path, bool synthetic)
  {
    auto flip = num(b.flip_angle, field(path, "flip_angle", synthetic));
    auto dur = duration(b.duration, field(path, "duration", synthetic));
    auto off = num(b.freq_offset, field(path, "freq_offset", synthetic));
    auto phase = num(b.phase, field(path, "phase", synthetic));
    std::optional<long> lobes = 3;
    if (b.shape == RfShape::sinc) { lobes = integer(b.sinc_lobes, field(path, "sinc_lobes", synthetic), 1); }
    std::optional<double> amp = 0.0;
    if (b.slice_grad_axis) { amp = num(b.slice_grad_amp, field(path, "slice_grad_amp", synthetic)); }
    if (!flip || !dur || !off || !phase || !lobes || !amp) { return; }
    if (*dur == 0.0) {
      if (*flip != 0.0) { report(field(path, "duration", synthetic), "invalid_value", std::nullopt, "RF pulse needs a positive duration"); }
      return;
    }

    RfWave w;
    w.shape = b.shape;
    w.duration = *dur;
    w.phase = deg_to_rad(*phase);
    w.freq_offset = *off;
    w.lobes = static_cast<int>(*lobes);
    w.amplitude = deg_to_rad(*flip) / (kGamma * envelope_integral(w));
    if (std::abs(w.amplitude) > doc_.scanner.max_rf_amp * (1 + kLimitSlack)) {
      report(field(path, "flip_angle", synthetic), "rf_amplitude", std::nullopt,
             fmt::format("B1 peak {} T exceeds max_rf_amp {}", std::abs(w.amplitude), doc_.scanner.max_rf_amp));
    }

    std::array<double, 3> g{};
    if (b.slice_grad_axis) { g[static_cast<int>(*b.slice_grad_axis)] = *amp; }
    if (b.slice_grad_axis) { check_amplitude(g, field(path, "slice_grad_amp", synthetic), true, *b.slice_grad_axis); }
    double const rise = derived_rise(g);
    emit(rise, {}, g, path);
    Event &e = emit(*dur, g, g, path);
    e.rf = w;
    last_rf_end_ = e.t_end;
    emit(rise, g, {}, path);
  }

  void visit(Gradient const &b, std::string const &path, bool synthetic)
  {
    auto gx = num(b.gx, field(path, "gx", synthetic));
    auto gy = num(b.gy, field(path, "gy", synthetic));
    auto gz = num(b.gz, field(path, "gz", synthetic));
    auto flat = duration(b.flat_duration, field(path, "flat_duration", synthetic));
    auto rise = duration(b.rise_time, field(path, "rise_time", synthetic));
    if (!gx || !gy || !gz || !flat || !rise) { return; }
    std::array<double, 3> const g{*gx, *gy, *gz};
    static char const *const     names[] = {"gx", "gy", "gz"};
    for (int a = 0; a < 3; ++a) {
      std::array<double, 3> one{};
      one[a] = g[a];
      check_amplitude(one, field(path, names[a], synthetic), true, static_cast<Axis>(a));
    }
    double r = *rise;
    if (r == 0.0) {
      r = derived_rise(g);
    } else {
      for (int a = 0; a < 3; ++a) {
        double const slew = std::abs(g[a]) / r;
        if (slew > doc_.scanner.max_slew * (1 + kLimitSlack)) {
          report(field(path, "rise_time", synthetic), "slew", static_cast<Axis>(a),
                 fmt::format("slew {} T/m/s on {} exceeds max_slew {}", slew, to_string(static_cast<Axis>(a)), doc_.scanner.max_slew));
        }
      }
    }
    trapezoid(g, r, *flat, path);
  }

  void visit(Delay const &b, std::string const &path, bool synthetic)
  {
    auto d = duration(b.duration, field(path, "duration", synthetic));
    if (!d) { return; }
    emit(*d, {}, {}, path);
  }

  void visit(Readout const &b, std::string const &path, bool synthetic)
  {
    auto n = integer(b.samples, field(path, "samples", synthetic), 1);
    auto d = duration(b.duration, field(path, "duration", synthetic));
    auto amp = num(b.read_grad_amp, field(path, "read_grad_amp", synthetic));
    auto tag = integer(b.line_tag, field(path, "line_tag", synthetic), 0);
    if (!n || !d || !amp || !tag) { return; }
    if (*d == 0.0) {
      report(field(path, "duration", synthetic), "invalid_value", std::nullopt, "readout needs a positive duration");
      return;
    }
    std::array<double, 3> g{};
    g[static_cast<int>(b.read_grad_axis)] = *amp;
    check_amplitude(g, field(path, "read_grad_amp", synthetic), true, b.read_grad_axis);
    double const rise = derived_rise(g);
    emit(rise, {}, g, path);
    if (last_rf_end_ && t_ - *last_rf_end_ < doc_.scanner.adc_dead_time * (1 - kLimitSlack)) {
      report(path, "adc_dead_time", std::nullopt,
             fmt::format("ADC starts {} s after RF, dead time is {} s", t_ - *last_rf_end_, doc_.scanner.adc_dead_time));
    }
    Event &e = emit(*d, g, g, path);
    e.adc = Adc{static_cast<int>(*n), static_cast<int>(*tag), *amp < 0.0};
    if (e.rf) { report(path, "adc_in_rf", std::nullopt, "ADC overlaps an RF pulse"); }
    emit(rise, g, {}, path);
  }

  void visit(EpiAcq const &b, std::string const &path, bool synthetic)
  {
    auto nl = integer(b.n_lines, field(path, "n_lines", synthetic), 2);
    auto ns = integer(b.samples_per_line, field(path, "samples_per_line", synthetic), 2);
    auto fov = num(b.fov, field(path, "fov", synthetic));
    if (!nl || !ns || !fov) { return; }
    EpiParams p{static_cast<int>(*nl), static_cast<int>(*ns), *fov, b.read_axis, b.phase_axis};
    std::vector<Block> expanded;
    try {
      expanded = expand_epi(p, doc_.scanner);
    } catch (FlattenError const &e) {
      report(path + e.path(), e.kind(), std::nullopt, e.message());
      return;
    }
    for (auto const &x : expanded) { walk(x, path, true); }
  }

  void visit(GroupRef const &b, std::string const &path, bool synthetic)
  {
    GroupDef const *g = doc_.find_group(b.group_name);
    if (!g) {
      report(field(path, "group_name", synthetic), "unknown_group", std::nullopt, fmt::format("no group named '{}'", b.group_name));
      return;
    }
    if (std::find(stack_.begin(), stack_.end(), g->name) != stack_.end()) {
      report(field(path, "group_name", synthetic), "cyclic_group", std::nullopt,
             fmt::format("group '{}' contains itself", g->name));
      return;
    }
    auto reps = integer(b.repetitions, field(path, "repetitions", synthetic), 1);
    if (!reps) { return; }
    std::size_t const gi = static_cast<std::size_t>(g - doc_.groups.data());
    stack_.push_back(g->name);
    for (long r = 0; r < *reps; ++r) {
      // Innermost counters shadow outer ones: lookups take the first match.
      bindings_.insert(bindings_.begin(), {expr::Binding{"rep", double(r)}, expr::Binding{"rep_" + g->name, double(r)}});
      for (std::size_t j = 0; j < g->blocks.size(); ++j) {
        walk(g->blocks[j], fmt::format(".groups[{}].blocks[{}]", gi, j), false);
      }
      bindings_.erase(bindings_.begin(), bindings_.begin() + 2);
    }
    stack_.pop_back();
  }

  SequenceDoc const       &doc_;
  expr::Evaluator          ev_;
  std::vector<Violation>  *out_;
  EventTimeline            tl_;
  Event                    scratch_;
  double                   t_ = 0.0;
  std::optional<double>    last_rf_end_;
  expr::Bindings           bindings_;
  std::vector<std::string> stack_;
};

} // namespace

EventTimeline flatten(SequenceDoc const &doc)
{
  Walker w(doc, nullptr);
  w.run();
  return w.take();
}

std::vector<Violation> validate(SequenceDoc const &doc)
{
  std::vector<Violation> raw;
  Walker                 w(doc, &raw);
  w.run();
  std::vector<Violation>                                        out;
  std::set<std::tuple<std::string, std::string, int>>           seen;
  for (auto &v : raw) {
    if (seen.emplace(v.path, v.kind, v.axis ? static_cast<int>(*v.axis) : -1).second) { out.push_back(std::move(v)); }
  }
  return out;
}

std::vector<Block> expand_epi(EpiParams const &p, Scanner const &scanner)
{
  if (p.n_lines < 2 || p.samples_per_line < 2) {
    throw FlattenError(".n_lines", "invalid_value", "EPI needs at least 2 lines and 2 samples per line");
  }
  if (p.read_axis == p.phase_axis) {
    throw FlattenError(".phase_axis", "invalid_value", "read_axis and phase_axis must differ");
  }
  if (!(p.fov > 0.0)) { throw FlattenError(".fov", "invalid_value", "fov must be positive"); }

  double const dk = 1.0 / p.fov;
  double const g_read = 0.8 * scanner.max_grad;
  double const rise = g_read / scanner.max_slew;
  double const dwell = dk / (kGammaBar * g_read);
  double const blip = dk / (kGammaBar * rise);
  if (blip / rise > scanner.max_slew * (1 + kLimitSlack) || blip > scanner.max_grad * (1 + kLimitSlack)) {
    throw FlattenError("", "slew",
                       fmt::format("phase blip of {} T/m over {} s exceeds scanner limits", blip, rise));
  }

  // Gradient areas (T·s/m) taking k to the first sample of line 0: row r and
  // column c sit at k = (r − ⌊N/2⌋)·Δk and (c − ⌊N/2⌋)·Δk.
  double const area_read = -(std::floor(p.samples_per_line / 2.0) + 0.5) * dk / kGammaBar - 0.5 * g_read * rise;
  double const area_phase = -std::floor(p.n_lines / 2.0) * dk / kGammaBar;
  double const area_max = std::max(std::abs(area_read), std::abs(area_phase));
  double       pre_amp = g_read;
  double       pre_rise = rise;
  double       pre_flat = area_max / pre_amp - pre_rise;
  if (pre_flat < 0.0) {
    pre_amp = std::sqrt(area_max * scanner.max_slew);
    pre_rise = pre_amp / scanner.max_slew;
    pre_flat = 0.0;
  }
  double const pre_span = pre_flat + pre_rise;

  auto gradient = [](Axis axis, double amp, Axis axis2, double amp2, double flat, double r) {
    Gradient g;
    Expression *slot[3] = {&g.gx, &g.gy, &g.gz};
    *slot[static_cast<int>(axis)] = lit(amp);
    *slot[static_cast<int>(axis2)] = lit(amp2);
    g.flat_duration = lit(flat);
    g.rise_time = lit(r);
    return g;
  };

  std::vector<Block> out;
  out.push_back(gradient(p.read_axis, area_read / pre_span, p.phase_axis, area_phase / pre_span, pre_flat, pre_rise));
  for (int line = 0; line < p.n_lines; ++line) {
    if (line > 0) { out.push_back(gradient(p.phase_axis, blip, p.read_axis, 0.0, 0.0, rise)); }
    Readout r;
    r.samples = lit(p.samples_per_line);
    r.duration = lit(p.samples_per_line * dwell);
    r.read_grad_axis = p.read_axis;
    r.read_grad_amp = lit(line % 2 ? -g_read : g_read);
    r.line_tag = lit(line);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Block> expand_epi(EpiAcq const &block, SequenceDoc const &doc)
{
  expr::Evaluator ev(doc.variables);
  auto            as_int = [&](Expression const &e) { return static_cast<int>(std::lround(ev.evaluate(e))); };
  EpiParams       p{as_int(block.n_lines), as_int(block.samples_per_line), ev.evaluate(block.fov), block.read_axis,
              block.phase_axis};
  return expand_epi(p, doc.scanner);
}

} // namespace mrseq::seq
