#include "nonnormal/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "nonnormal/error.hpp"

namespace nonnormal {

namespace {

constexpr const char* kMagic = "nonnormal-checkpoint 1";

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_array(std::ostream& os, std::string_view name, const Matrix& m) {
  os << "array " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

std::string expect_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw DataError(std::string("checkpoint: truncated before ") + what);
  return line;
}

std::string expect_field(std::istream& is, std::string_view key) {
  const std::string line = expect_line(is, key.data());
  const auto space = line.find(' ');
  if (space == std::string::npos || std::string_view(line).substr(0, space) != key) {
    throw DataError("checkpoint: expected '" + std::string(key) + " <value>', got '" + line + "'");
  }
  return line.substr(space + 1);
}

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw DataError("checkpoint: trailing characters in '" + s + "'");
    return x;
  } catch (const std::logic_error&) {
    throw DataError("checkpoint: bad number '" + s + "'");
  }
}

Matrix read_array(std::istream& is, std::string_view name) {
  const std::string header = expect_line(is, name.data());
  std::istringstream hs(header);
  std::string tag, got;
  long rows = -1, cols = -1;
  hs >> tag >> got >> rows >> cols;
  if (tag != "array" || got != name || rows < 0 || cols < 0) {
    throw DataError("checkpoint: expected 'array " + std::string(name) + " <rows> <cols>', got '" +
                    header + "'");
  }
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    std::istringstream ls(expect_line(is, name.data()));
    std::string token;
    for (long j = 0; j < cols; ++j) {
      if (!(ls >> token)) throw DataError("checkpoint: short row in array " + std::string(name));
      m(i, j) = parse_double(token);
    }
    if (ls >> token) throw DataError("checkpoint: long row in array " + std::string(name));
  }
  return m;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os << kMagic << '\n';
  os << "init " << to_string(ckpt.init.kind) << '\n';
  os << "lambda " << format_double(ckpt.init.lambda) << '\n';
  os << "alpha " << format_double(ckpt.init.alpha) << '\n';
  os << "beta " << format_double(ckpt.init.beta) << '\n';
  os << "seed " << ckpt.init.seed << '\n';
  os << "nonlinearity " << to_string(ckpt.nonlinearity) << '\n';
  const auto& p = ckpt.params;
  write_array(os, "w", p.w);
  write_array(os, "v", p.v);
  write_array(os, "b", p.b);
  write_array(os, "w_out", p.w_out);
  write_array(os, "b_out", p.b_out);
  os << "end\n";
}

Checkpoint read_checkpoint(std::istream& is) {
  if (expect_line(is, "magic") != kMagic) throw DataError("checkpoint: bad magic line");
  Checkpoint ckpt;
  ckpt.init.kind = parse_init_kind(expect_field(is, "init"));
  ckpt.init.lambda = parse_double(expect_field(is, "lambda"));
  ckpt.init.alpha = parse_double(expect_field(is, "alpha"));
  ckpt.init.beta = parse_double(expect_field(is, "beta"));
  ckpt.init.seed = std::stoull(expect_field(is, "seed"));
  ckpt.nonlinearity = parse_nonlinearity(expect_field(is, "nonlinearity"));
  auto& p = ckpt.params;
  p.w = read_array(is, "w");
  p.v = read_array(is, "v");
  p.b = read_array(is, "b");
  p.w_out = read_array(is, "w_out");
  p.b_out = read_array(is, "b_out");
  if (expect_line(is, "end") != "end") throw DataError("checkpoint: missing end marker");

  const auto n = p.w.rows();
  if (p.w.cols() != n || p.v.rows() != n || p.b.size() != n || p.w_out.cols() != n ||
      p.b_out.size() != p.w_out.rows()) {
    throw DataError("checkpoint: inconsistent array shapes");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path);
  if (!os) throw DataError("checkpoint: cannot open '" + path.string() + "' for writing");
  write_checkpoint(os, ckpt);
  if (!os) throw DataError("checkpoint: write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("checkpoint: cannot open '" + path.string() + "'");
  return read_checkpoint(is);
}

}  // namespace nonnormal
