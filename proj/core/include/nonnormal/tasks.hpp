#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "nonnormal/rng.hpp"
#include "nonnormal/rnn.hpp"

namespace nonnormal {

enum class TaskKind { kCopy, kAddition, kPsMnist };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

/// Copy task layout: 10 symbols from {1..8}, T−21 blanks, the cue 9, then 10
/// blanks. Inputs are one-hot over {0..9}; outputs are 9-way over {0..8}.
inline constexpr int kCopyMemoryLength = 10;
inline constexpr int kCopyInputSymbols = 10;
inline constexpr int kCopyOutputClasses = 9;
inline constexpr int kCopyCue = 9;
inline constexpr int kMnistPixels = 784;
inline constexpr int kMnistClasses = 10;

/// One minibatch of a benchmark. Inputs and targets follow the RNN module's
/// layout (one matrix per step, batch along columns).
struct TaskBatch {
  TaskKind task = TaskKind::kCopy;
  int t_len = 0;
  std::uint64_t seed = 0;
  Sequence inputs;
  Targets targets;
  std::vector<bool> mask;
  LossKind loss = LossKind::kCrossEntropy;
  int num_outputs = 0;

  int batch_size() const { return inputs.empty() ? 0 : static_cast<int>(inputs.front().cols()); }
  int input_size() const { return inputs.empty() ? 0 : static_cast<int>(inputs.front().rows()); }
};

/// Copy-task batch; loss is 9-way cross-entropy on every step. t_len >= 22.
TaskBatch gen_copy(int t_len, int batch, Rng& rng);
TaskBatch gen_copy(int t_len, int batch, std::uint64_t seed);

/// Addition-task batch: channel 0 ~ U[0,1), channel 1 marks one position in
/// [0, T/2) and one in [T/2, T); mse on the final step against their sum.
TaskBatch gen_addition(int t_len, int batch, Rng& rng);
TaskBatch gen_addition(int t_len, int batch, std::uint64_t seed);

/// Input symbol sequence of batch element b of a copy batch (argmax of the one-hot).
std::vector<int> copy_input_symbols(const TaskBatch& batch, int b);

/// Loss of the memoryless baseline:
///   copy: 10·ln 8 / T (blank everywhere, uniform over {1..8} on the last 10 steps)
///   addition: 1/6 (always predict 1)
///   psMNIST: ln 10 (uniform classifier)
double baseline_loss(TaskKind task, int t_len);

struct MnistImages {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  ///< count × rows × cols, row-major
};

/// IDX3 image file (magic 0x00000803, big-endian header).
MnistImages read_idx_images(const std::filesystem::path& path);
/// IDX1 label file (magic 0x00000801).
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

struct MnistSplit {
  std::vector<std::uint8_t> pixels;  ///< size() × 784
  std::vector<std::uint8_t> labels;

  int size() const { return static_cast<int>(labels.size()); }
};

struct PsMnistOptions {
  std::uint64_t permutation_seed = 1;
  bool identity_permutation = false;
  int validation_size = 5000;
};

/// Permuted sequential MNIST: one fixed pixel permutation shared by every
/// split; the validation split is the last `validation_size` training images.
struct PsMnist {
  MnistSplit train;
  MnistSplit validation;
  MnistSplit test;
  std::vector<int> permutation;  ///< step t reads pixel permutation[t]

  /// 784-step batch of the given images, pixels scaled to [0, 1]; 10-way
  /// cross-entropy on the final step.
  TaskBatch batch(const MnistSplit& split, std::span<const int> indices) const;
};

/// Fisher–Yates shuffle of {0..783} driven by Rng(seed, Stream::kPermutation).
std::vector<int> pixel_permutation(std::uint64_t seed);

/// Loads train-images-idx3-ubyte, train-labels-idx1-ubyte,
/// t10k-images-idx3-ubyte and t10k-labels-idx1-ubyte from `dir`.
PsMnist load_psmnist(const std::filesystem::path& dir, const PsMnistOptions& options);

}  // namespace nonnormal
