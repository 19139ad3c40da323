#pragma once

#include <string>

#include "invlab/training.hpp"

// Checkpoint files: one line of JSON (layer names, shapes, byte offsets,
// arch spec, train config, seed) followed by the flat little-endian float32
// parameter blob.

namespace invlab {

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace invlab
