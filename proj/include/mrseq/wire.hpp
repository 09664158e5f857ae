#pragma once

// JSON forms shared by the CLI and the HTTP service.

#include "mrseq/bloch.hpp"
#include "mrseq/phantom.hpp"
#include "mrseq/seq.hpp"

#include <json.hpp>

#include <optional>
#include <vector>

namespace mrseq::wire {

using Json = nlohmann::ordered_json;

// {"t": [...], "rf_mag": [...], ...}; every array has the same length.
Json to_json(seq::PlotSeries const &s);
Json to_json(std::vector<seq::Violation> const &v);
Json to_json(phantom::SliceImage const &s);
Json to_json(std::optional<phantom::SlicePlane> const &p);

// Optional keys: dt_rf, dt_grad, threads, kernel ("auto", "scalar", "avx2").
// Throws SchemaError with a path under `where`.
bloch::SimConfig sim_config(nlohmann::json const &j, std::string const &where = ".config");

// Built-in name, or path to an MRPH file.
phantom::Phantom resolve_phantom(std::string const &spec);

} // namespace mrseq::wire
