#include "nonnormal/tasks.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "nonnormal/error.hpp"

namespace nonnormal {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kCopy: return "copy";
    case TaskKind::kAddition: return "addition";
    case TaskKind::kPsMnist: return "psmnist";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "copy") return TaskKind::kCopy;
  if (name == "addition") return TaskKind::kAddition;
  if (name == "psmnist") return TaskKind::kPsMnist;
  throw InvalidArgument("unknown task '" + std::string(name) + "'");
}

TaskBatch gen_copy(int t_len, int batch, Rng& rng) {
  if (t_len < 2 * kCopyMemoryLength + 2) {
    throw InvalidArgument("gen_copy: t_len must be >= 22, got " + std::to_string(t_len));
  }
  if (batch < 1) throw InvalidArgument("gen_copy: batch must be positive");
  TaskBatch out;
  out.task = TaskKind::kCopy;
  out.t_len = t_len;
  out.loss = LossKind::kCrossEntropy;
  out.num_outputs = kCopyOutputClasses;
  out.inputs.assign(static_cast<std::size_t>(t_len), Matrix::Zero(kCopyInputSymbols, batch));
  out.targets.classes.assign(static_cast<std::size_t>(t_len), std::vector<int>(static_cast<std::size_t>(batch), 0));
  out.mask.assign(static_cast<std::size_t>(t_len), true);

  const int cue = t_len - kCopyMemoryLength - 1;
  for (int b = 0; b < batch; ++b) {
    std::vector<int> symbols(static_cast<std::size_t>(t_len), 0);
    for (int i = 0; i < kCopyMemoryLength; ++i) {
      const int s = 1 + static_cast<int>(rng.below(8));
      symbols[static_cast<std::size_t>(i)] = s;
      out.targets.classes[static_cast<std::size_t>(t_len - kCopyMemoryLength + i)][static_cast<std::size_t>(b)] = s;
    }
    symbols[static_cast<std::size_t>(cue)] = kCopyCue;
    for (int t = 0; t < t_len; ++t) out.inputs[static_cast<std::size_t>(t)](symbols[static_cast<std::size_t>(t)], b) = 1.0;
  }
  return out;
}

TaskBatch gen_copy(int t_len, int batch, std::uint64_t seed) {
  Rng rng(seed);
  auto out = gen_copy(t_len, batch, rng);
  out.seed = seed;
  return out;
}

TaskBatch gen_addition(int t_len, int batch, Rng& rng) {
  if (t_len < 2) throw InvalidArgument("gen_addition: t_len must be >= 2");
  if (batch < 1) throw InvalidArgument("gen_addition: batch must be positive");
  TaskBatch out;
  out.task = TaskKind::kAddition;
  out.t_len = t_len;
  out.loss = LossKind::kMse;
  out.num_outputs = 1;
  out.inputs.assign(static_cast<std::size_t>(t_len), Matrix::Zero(2, batch));
  out.targets.values.assign(static_cast<std::size_t>(t_len), Matrix::Zero(1, batch));
  out.mask.assign(static_cast<std::size_t>(t_len), false);
  out.mask.back() = true;

  const int half = t_len / 2;
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < t_len; ++t) out.inputs[static_cast<std::size_t>(t)](0, b) = rng.uniform();
    const int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(half)));
    const int second = half + static_cast<int>(rng.below(static_cast<std::uint64_t>(t_len - half)));
    out.inputs[static_cast<std::size_t>(first)](1, b) = 1.0;
    out.inputs[static_cast<std::size_t>(second)](1, b) = 1.0;
    out.targets.values.back()(0, b) = out.inputs[static_cast<std::size_t>(first)](0, b) +
                                      out.inputs[static_cast<std::size_t>(second)](0, b);
  }
  return out;
}

TaskBatch gen_addition(int t_len, int batch, std::uint64_t seed) {
  Rng rng(seed);
  auto out = gen_addition(t_len, batch, rng);
  out.seed = seed;
  return out;
}

std::vector<int> copy_input_symbols(const TaskBatch& batch, int b) {
  std::vector<int> out;
  out.reserve(batch.inputs.size());
  for (const auto& x : batch.inputs) {
    Eigen::Index s;
    x.col(b).maxCoeff(&s);
    out.push_back(static_cast<int>(s));
  }
  return out;
}

double baseline_loss(TaskKind task, int t_len) {
  switch (task) {
    case TaskKind::kCopy:
      if (t_len <= 0) throw InvalidArgument("baseline_loss: t_len must be positive");
      return kCopyMemoryLength * std::log(8.0) / t_len;
    case TaskKind::kAddition: return 1.0 / 6.0;
    case TaskKind::kPsMnist: return std::log(10.0);
  }
  return 0.0;
}

namespace {

std::uint32_t read_be32(std::istream& is, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError("idx: '" + path.string() + "' is truncated in its header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::ifstream open_idx(const std::filesystem::path& path, std::uint32_t magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("idx: cannot open '" + path.string() +
                    "' (expected an uncompressed MNIST IDX file; gunzip downloaded files first)");
  }
  const std::uint32_t got = read_be32(is, path);
  if (got != magic) {
    throw DataError("idx: '" + path.string() + "' has magic " + std::to_string(got) + ", expected " +
                    std::to_string(magic));
  }
  return is;
}

void read_payload(std::ifstream& is, std::vector<std::uint8_t>& out, const std::filesystem::path& path) {
  if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()))) {
    throw DataError("idx: '" + path.string() + "' is truncated: expected " + std::to_string(out.size()) +
                    " payload bytes");
  }
}

MnistSplit take(const MnistImages& images, const std::vector<std::uint8_t>& labels, int begin, int end) {
  MnistSplit split;
  const auto pixels = static_cast<std::size_t>(kMnistPixels);
  split.pixels.assign(images.pixels.begin() + static_cast<std::ptrdiff_t>(begin * pixels),
                      images.pixels.begin() + static_cast<std::ptrdiff_t>(end * pixels));
  split.labels.assign(labels.begin() + begin, labels.begin() + end);
  return split;
}

}  // namespace

MnistImages read_idx_images(const std::filesystem::path& path) {
  auto is = open_idx(path, 0x00000803);
  MnistImages out;
  out.count = static_cast<int>(read_be32(is, path));
  out.rows = static_cast<int>(read_be32(is, path));
  out.cols = static_cast<int>(read_be32(is, path));
  out.pixels.resize(static_cast<std::size_t>(out.count) * out.rows * out.cols);
  read_payload(is, out.pixels, path);
  return out;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  auto is = open_idx(path, 0x00000801);
  std::vector<std::uint8_t> labels(read_be32(is, path));
  read_payload(is, labels, path);
  for (auto l : labels) {
    if (l >= kMnistClasses) throw DataError("idx: '" + path.string() + "' has a label outside 0..9");
  }
  return labels;
}

std::vector<int> pixel_permutation(std::uint64_t seed) {
  std::vector<int> perm(kMnistPixels);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed, Stream::kPermutation);
  for (int i = kMnistPixels - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

PsMnist load_psmnist(const std::filesystem::path& dir, const PsMnistOptions& options) {
  const auto train_images = read_idx_images(dir / "train-images-idx3-ubyte");
  const auto train_labels = read_idx_labels(dir / "train-labels-idx1-ubyte");
  const auto test_images = read_idx_images(dir / "t10k-images-idx3-ubyte");
  const auto test_labels = read_idx_labels(dir / "t10k-labels-idx1-ubyte");
  for (const auto* images : {&train_images, &test_images}) {
    if (images->rows * images->cols != kMnistPixels) {
      throw DataError("psmnist: images must be 28x28, got " + std::to_string(images->rows) + "x" +
                      std::to_string(images->cols));
    }
  }
  if (train_images.count != static_cast<int>(train_labels.size()) ||
      test_images.count != static_cast<int>(test_labels.size())) {
    throw DataError("psmnist: image and label counts disagree");
  }
  if (options.validation_size < 0 || options.validation_size >= train_images.count) {
    throw DataError("psmnist: validation split of " + std::to_string(options.validation_size) +
                    " does not fit in " + std::to_string(train_images.count) + " training images");
  }

  PsMnist out;
  const int cut = train_images.count - options.validation_size;
  out.train = take(train_images, train_labels, 0, cut);
  out.validation = take(train_images, train_labels, cut, train_images.count);
  out.test = take(test_images, test_labels, 0, test_images.count);
  if (options.identity_permutation) {
    out.permutation.resize(kMnistPixels);
    std::iota(out.permutation.begin(), out.permutation.end(), 0);
  } else {
    out.permutation = pixel_permutation(options.permutation_seed);
  }
  return out;
}

TaskBatch PsMnist::batch(const MnistSplit& split, std::span<const int> indices) const {
  const auto batch = static_cast<Eigen::Index>(indices.size());
  TaskBatch out;
  out.task = TaskKind::kPsMnist;
  out.t_len = kMnistPixels;
  out.loss = LossKind::kCrossEntropy;
  out.num_outputs = kMnistClasses;
  out.inputs.assign(kMnistPixels, Matrix::Zero(1, batch));
  out.targets.classes.assign(kMnistPixels, std::vector<int>(indices.size(), 0));
  out.mask.assign(kMnistPixels, false);
  out.mask.back() = true;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int idx = indices[static_cast<std::size_t>(b)];
    if (idx < 0 || idx >= split.size()) throw InvalidArgument("psmnist: image index out of range");
    const std::uint8_t* image = split.pixels.data() + static_cast<std::size_t>(idx) * kMnistPixels;
    for (int t = 0; t < kMnistPixels; ++t) {
      out.inputs[static_cast<std::size_t>(t)](0, b) = image[permutation[static_cast<std::size_t>(t)]] / 255.0;
    }
    out.targets.classes.back()[static_cast<std::size_t>(b)] = split.labels[static_cast<std::size_t>(idx)];
  }
  return out;
}

}  // namespace nonnormal
