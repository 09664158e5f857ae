#pragma once

// The one code path from sequence document and phantom to result file,
// shared by the CLI and the service.

#include "mrseq/bloch.hpp"
#include "mrseq/recon.hpp"
#include "mrseq/seq.hpp"

#include <string>
#include <vector>

namespace mrseq {

class InvalidSequence : public Error
{
public:
  explicit InvalidSequence(std::vector<seq::Violation> v);
  std::vector<seq::Violation> const &violations() const noexcept { return violations_; }

private:
  std::vector<seq::Violation> violations_;
};

struct PipelineResult
{
  bloch::RawAcquisition raw;
  recon::KSpace         kspace;
  recon::ImageResult    image;
  std::string           bytes;  // result file
};

// BLAKE2b-256 of the canonical document bytes, hex.
std::string sequence_hash(seq::SequenceDoc const &doc);

// Throws InvalidSequence when validation reports violations.
PipelineResult run_pipeline(seq::SequenceDoc const &doc, phantom::Phantom const &ph, bloch::SimConfig const &cfg,
                            bloch::RunControl const &control = {});

} // namespace mrseq
