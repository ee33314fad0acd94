#pragma once

// Writes small synthetic MNIST-style IDX files for ingestion tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

namespace idx {

inline void put_u32(std::ofstream& os, std::uint32_t x) {
  const unsigned char b[4] = {static_cast<unsigned char>(x >> 24), static_cast<unsigned char>(x >> 16),
                              static_cast<unsigned char>(x >> 8), static_cast<unsigned char>(x)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_images(const std::filesystem::path& path, int count, int rows, int cols, std::uint32_t magic = 0x803,
                         long truncate_to = -1) {
  std::ofstream os(path, std::ios::binary);
  put_u32(os, magic);
  put_u32(os, static_cast<std::uint32_t>(count));
  put_u32(os, static_cast<std::uint32_t>(rows));
  put_u32(os, static_cast<std::uint32_t>(cols));
  std::vector<unsigned char> px(static_cast<std::size_t>(count) * rows * cols);
  // image i, pixel p holds (i * 7 + p) mod 256
  for (std::size_t k = 0; k < px.size(); ++k) {
    const std::size_t i = k / (static_cast<std::size_t>(rows) * cols), p = k % (static_cast<std::size_t>(rows) * cols);
    px[k] = static_cast<unsigned char>((i * 7 + p) % 256);
  }
  const std::size_t n = truncate_to >= 0 ? static_cast<std::size_t>(truncate_to) : px.size();
  os.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(n));
}

inline void write_labels(const std::filesystem::path& path, int count, std::uint32_t magic = 0x801) {
  std::ofstream os(path, std::ios::binary);
  put_u32(os, magic);
  put_u32(os, static_cast<std::uint32_t>(count));
  for (int i = 0; i < count; ++i) os.put(static_cast<char>(i % 10));
}

// Four standard files: `train` training images, `test` test images.
inline void write_dataset(const std::filesystem::path& dir, int train, int test) {
  std::filesystem::create_directories(dir);
  write_images(dir / "train-images-idx3-ubyte", train, 28, 28);
  write_labels(dir / "train-labels-idx1-ubyte", train);
  write_images(dir / "t10k-images-idx3-ubyte", test, 28, 28);
  write_labels(dir / "t10k-labels-idx1-ubyte", test);
}

}  // namespace idx
