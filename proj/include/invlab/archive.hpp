#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "invlab/data.hpp"
#include "invlab/datasynth.hpp"

// On-disk trial container: a directory holding manifest.json plus
// trials.bin (little-endian float32, row-major [trial][channel][time]).

namespace invlab {

struct ArchiveMeta {
  std::string subject_id = "synthetic";
  std::optional<GeneratorConfig> generator;  // present for synthetic archives
  std::uint64_t seed = 0;
  int fs_out = 300;
};

/// Writes manifest.json + trials.bin under `dir` (created if missing).
void write_archive(const TrialSet& trials, const std::string& dir, const ArchiveMeta& meta = {});

/// Reads and validates an archive; every manifest invariant is checked
/// before the set is returned.
TrialSet read_archive(const std::string& dir, ArchiveMeta* meta_out = nullptr);

}  // namespace invlab
