#include "mrseq/seq.hpp"

#include <fmt/format.h>

namespace mrseq::seq {

namespace {

// Documents are written compactly here; example_source() returns their
// canonical form.

constexpr char const *kGeEpi = R"json({
 "mrseq_version": 1,
 "description": "Single-shot GE-EPI. Sinc excitation at a -20 kHz offset with a z slice gradient, slice rephaser, 1 ms delay and an N x N EPI readout.",
 "scanner": {"b0": 1.5, "max_rf_amp": 50e-6, "max_grad": 0.04, "max_slew": 150, "adc_dead_time": 0},
 "variables": [
  {"name": "N", "expr": "100"},
  {"name": "A", "expr": "1e6/gamma"},
  {"name": "df", "expr": "-20e3"},
  {"name": "T_rf", "expr": "3e-3"},
  {"name": "fov", "expr": "0.24"},
  {"name": "slew", "expr": "150"}
 ],
 "groups": [],
 "blocks": [
  {"type": "rf", "label": "Ex", "shape": "sinc", "flip_angle": "90", "duration": "T_rf", "freq_offset": "df",
   "sinc_lobes": "3", "slice_grad_axis": "z", "slice_grad_amp": "A"},
  {"type": "gradient", "label": "Dephase", "gz": "-A", "flat_duration": "T_rf/2 - A/(2*slew)"},
  {"type": "delay", "label": "Delay", "duration": "1e-3"},
  {"type": "epi_acq", "label": "EPI_ACQ", "n_lines": "N", "samples_per_line": "N", "fov": "fov",
   "read_axis": "x", "phase_axis": "y"}
 ]
})json";

constexpr char const *kSpinEcho = R"json({
 "mrseq_version": 1,
 "description": "Multi-shot spin echo. The TR group is repeated N_matrix times, one phase-encode line per repetition. The crusher pair straddles the 180 degree pulse; delays d1, d2 and d3 hold TE and TR. Keep slew equal to scanner.max_slew.",
 "scanner": {"b0": 1.5, "max_rf_amp": 50e-6, "max_grad": 0.04, "max_slew": 150, "adc_dead_time": 0},
 "variables": [
  {"name": "N_matrix", "expr": "100"},
  {"name": "fov", "expr": "0.24"},
  {"name": "dk", "expr": "1/fov"},
  {"name": "TE", "expr": "20e-3"},
  {"name": "TR", "expr": "500e-3"},
  {"name": "slew", "expr": "150"},
  {"name": "T_rf", "expr": "2e-3"},
  {"name": "lobes", "expr": "3"},
  {"name": "thk", "expr": "5e-3"},
  {"name": "A", "expr": "(lobes + 1)/T_rf/(gamma*thk)"},
  {"name": "r_ss", "expr": "A/slew"},
  {"name": "T_ro", "expr": "4e-3"},
  {"name": "G_ro", "expr": "N_matrix*dk/(gamma*T_ro)"},
  {"name": "r_ro", "expr": "G_ro/slew"},
  {"name": "dwell", "expr": "T_ro/N_matrix"},
  {"name": "tau", "expr": "1e-3"},
  {"name": "rd", "expr": "2e-4"},
  {"name": "G_c", "expr": "20e-3"},
  {"name": "t_c", "expr": "1e-3"},
  {"name": "r_c", "expr": "G_c/slew"},
  {"name": "d1", "expr": "TE/2 - (T_rf/2 + r_ss + 2*rd + tau + 2*r_c + t_c + r_ss + T_rf/2)"},
  {"name": "d2", "expr": "TE/2 - (T_rf/2 + r_ss + 2*r_c + t_c + r_ro + (floor(N_matrix/2) + 0.5)*dwell)"},
  {"name": "t_used", "expr": "2*(T_rf + 2*r_ss) + 2*rd + tau + d1 + 2*(2*r_c + t_c) + d2 + T_ro + 2*r_ro"},
  {"name": "d3", "expr": "TR - t_used"}
 ],
 "groups": [
  {"name": "TR", "blocks": [
   {"type": "rf", "label": "Ex", "shape": "sinc", "flip_angle": "90", "duration": "T_rf", "sinc_lobes": "lobes",
    "slice_grad_axis": "z", "slice_grad_amp": "A"},
   {"type": "gradient", "label": "Dephase",
    "gx": "((floor(N_matrix/2) + 0.5)*dk/gamma + G_ro*r_ro/2)/(tau + rd)",
    "gy": "-(rep - floor(N_matrix/2))*dk/gamma/(tau + rd)",
    "gz": "-A*(T_rf/2 + r_ss/2)/(tau + rd)",
    "flat_duration": "tau", "rise_time": "rd"},
   {"type": "delay", "label": "Delay", "duration": "d1"},
   {"type": "gradient", "label": "Dephase", "gz": "G_c", "flat_duration": "t_c"},
   {"type": "rf", "label": "Ex", "shape": "sinc", "flip_angle": "180", "phase": "90", "duration": "T_rf",
    "sinc_lobes": "lobes", "slice_grad_axis": "z", "slice_grad_amp": "A"},
   {"type": "gradient", "label": "Dephase", "gz": "G_c", "flat_duration": "t_c"},
   {"type": "delay", "label": "Delay", "duration": "d2"},
   {"type": "readout", "label": "Readout", "samples": "N_matrix", "duration": "T_ro", "read_grad_axis": "x",
    "read_grad_amp": "G_ro", "line_tag": "rep"},
   {"type": "delay", "label": "Delay", "duration": "d3"}
  ]}
 ],
 "blocks": [
  {"type": "group_ref", "label": "TR", "group_name": "TR", "repetitions": "N_matrix"}
 ]
})json";

// Balanced SSFP: an even number of dummy TRs without ADC followed by N
// acquired TRs. RF phase alternates by 180 degrees every TR. Every gradient
// axis integrates to zero over a TR.
constexpr char const *kBssfpTemplate = R"json({{
 "mrseq_version": 1,
 "description": "{description}",
 "scanner": {{"b0": 1.5, "max_rf_amp": 50e-6, "max_grad": 0.04, "max_slew": 150, "adc_dead_time": 0}},
 "variables": [
  {{"name": "N", "expr": "{n}"}},
  {{"name": "n_dummy", "expr": "{n_dummy}"}},
  {{"name": "fov", "expr": "{fov}"}},
  {{"name": "dk", "expr": "1/fov"}},
  {{"name": "flip", "expr": "{flip}"}},
  {{"name": "slew", "expr": "150"}},
  {{"name": "T_rf", "expr": "1e-3"}},
  {{"name": "lobes", "expr": "3"}},
  {{"name": "thk", "expr": "{thk}"}},
  {{"name": "A", "expr": "(lobes + 1)/T_rf/(gamma*thk)"}},
  {{"name": "r_ss", "expr": "A/slew"}},
  {{"name": "T_ro", "expr": "{t_ro}"}},
  {{"name": "G_ro", "expr": "N*dk/(gamma*T_ro)"}},
  {{"name": "r_ro", "expr": "G_ro/slew"}},
  {{"name": "tau", "expr": "3e-4"}},
  {{"name": "rd", "expr": "2e-4"}},
  {{"name": "k_pre", "expr": "(floor(N/2) + 0.5)*dk/gamma + G_ro*r_ro/2"}},
  {{"name": "k_post", "expr": "(N - floor(N/2) - 0.5)*dk/gamma + G_ro*r_ro/2"}},
  {{"name": "g_ss", "expr": "-A*(T_rf/2 + r_ss/2)/(tau + rd)"}}
 ],
 "groups": [
  {{"name": "dummy", "blocks": [
   {{"type": "rf", "label": "Ex", "shape": "sinc", "flip_angle": "flip", "phase": "180*rep", "duration": "T_rf",
    "sinc_lobes": "lobes", "slice_grad_axis": "z", "slice_grad_amp": "A"}},
   {{"type": "gradient", "label": "Dephase", "gx": "-k_pre/(tau + rd)", "gz": "g_ss", "flat_duration": "tau", "rise_time": "rd"}},
   {{"type": "gradient", "label": "Read", "gx": "G_ro", "flat_duration": "T_ro"}},
   {{"type": "gradient", "label": "Rewind", "gx": "-k_post/(tau + rd)", "gz": "g_ss", "flat_duration": "tau", "rise_time": "rd"}}
  ]}},
  {{"name": "TR", "blocks": [
   {{"type": "rf", "label": "Ex", "shape": "sinc", "flip_angle": "flip", "phase": "180*rep", "duration": "T_rf",
    "sinc_lobes": "lobes", "slice_grad_axis": "z", "slice_grad_amp": "A"}},
   {{"type": "gradient", "label": "Dephase", "gx": "-k_pre/(tau + rd)",
    "gy": "(rep - floor(N/2))*dk/gamma/(tau + rd)", "gz": "g_ss", "flat_duration": "tau", "rise_time": "rd"}},
   {{"type": "readout", "label": "Readout", "samples": "N", "duration": "T_ro", "read_grad_axis": "x",
    "read_grad_amp": "G_ro", "line_tag": "rep"}},
   {{"type": "gradient", "label": "Rewind", "gx": "-k_post/(tau + rd)",
    "gy": "-(rep - floor(N/2))*dk/gamma/(tau + rd)", "gz": "g_ss", "flat_duration": "tau", "rise_time": "rd"}}
  ]}}
 ],
 "blocks": [
  {{"type": "group_ref", "label": "Dummies", "group_name": "dummy", "repetitions": "n_dummy"}},
  {{"type": "group_ref", "label": "TR", "group_name": "TR", "repetitions": "N"}}
 ]
}})json";

constexpr char const *kTofEpi = R"json({
 "mrseq_version": 1,
 "description": "GE-EPI through the axial slice of the flow cylinder. One excitation, so inflowing and static spins carry the same magnetization.",
 "scanner": {"b0": 1.5, "max_rf_amp": 50e-6, "max_grad": 0.04, "max_slew": 150, "adc_dead_time": 0},
 "variables": [
  {"name": "N", "expr": "32"},
  {"name": "fov", "expr": "0.048"},
  {"name": "T_rf", "expr": "1e-3"},
  {"name": "lobes", "expr": "3"},
  {"name": "thk", "expr": "5e-3"},
  {"name": "A", "expr": "(lobes + 1)/T_rf/(gamma*thk)"},
  {"name": "slew", "expr": "150"}
 ],
 "groups": [],
 "blocks": [
  {"type": "rf", "label": "Ex", "shape": "sinc", "flip_angle": "90", "duration": "T_rf", "sinc_lobes": "lobes",
   "slice_grad_axis": "z", "slice_grad_amp": "A"},
  {"type": "gradient", "label": "Dephase", "gz": "-A", "flat_duration": "T_rf/2 - A/(2*slew)"},
  {"type": "epi_acq", "label": "EPI_ACQ", "n_lines": "N", "samples_per_line": "N", "fov": "fov",
   "read_axis": "x", "phase_axis": "y"}
 ]
})json";

std::string bssfp(std::string_view description, int n, int n_dummy, double fov, double flip, double thk, double t_ro)
{
  return fmt::format(fmt::runtime(kBssfpTemplate), fmt::arg("description", description), fmt::arg("n", n),
                     fmt::arg("n_dummy", n_dummy), fmt::arg("fov", fov), fmt::arg("flip", flip), fmt::arg("thk", thk),
                     fmt::arg("t_ro", t_ro));
}

std::string raw_source(std::string_view name)
{
  if (name == "ge_epi") { return kGeEpi; }
  if (name == "spin_echo") { return kSpinEcho; }
  if (name == "bssfp") {
    return bssfp("Balanced SSFP, 64 x 64, alternating RF phase, 40 dummy TRs to approach steady state.", 64, 40, 0.24,
                 60, 5e-3, 2e-3);
  }
  if (name == "tof_epi") { return kTofEpi; }
  if (name == "tof_bssfp") {
    return bssfp("Short-TR bSSFP through the axial slice of the flow cylinder. Static spins saturate while inflowing "
                 "spins arrive fully relaxed.",
                 32, 40, 0.048, 60, 5e-3, 1e-3);
  }
  throw Error(fmt::format("no bundled example named '{}'", name));
}

} // namespace

std::vector<std::string> example_names() { return {"ge_epi", "spin_echo", "bssfp", "tof_epi", "tof_bssfp"}; }

std::string example_source(std::string_view name) { return save_sequence(load_sequence(raw_source(name))); }

SequenceDoc example(std::string_view name) { return load_sequence(raw_source(name)); }

} // namespace mrseq::seq
