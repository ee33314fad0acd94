#pragma once

#include <filesystem>
#include <iosfwd>

#include "nonnormal/init.hpp"
#include "nonnormal/rnn.hpp"

namespace nonnormal {

/// Trained network plus the initializer it started from. The text format is
/// described byte by byte in docs/checkpoint-format.md; values are written
/// with 17 significant digits so a save/load cycle is lossless.
struct Checkpoint {
  RnnParams params;
  InitSpec init;
  Nonlinearity nonlinearity = Nonlinearity::kElu;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nonnormal
