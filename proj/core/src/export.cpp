#include "nonnormal/export.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "nonnormal/error.hpp"

namespace nonnormal {

namespace {

constexpr std::array<std::string_view, 7> kFigureNames = {
    "memory_curves", "amplification", "decoding", "losses", "success_bars", "profiles", "beta"};

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// Names in this artifact never need quoting except for stray commas or quotes.
std::string field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string_view to_string(FigureKind kind) { return kFigureNames[static_cast<std::size_t>(kind)]; }

FigureKind parse_figure_kind(std::string_view name) {
  for (std::size_t i = 0; i < kFigureNames.size(); ++i) {
    if (kFigureNames[i] == name) return static_cast<FigureKind>(i);
  }
  throw InvalidArgument("unknown figure kind '" + std::string(name) +
                        "' (expected memory_curves, amplification, decoding, losses, success_bars, profiles, beta)");
}

void write_curves_csv(std::ostream& os, const std::vector<NamedCurve>& curves) {
  os << 'k';
  std::size_t rows = 0;
  for (const auto& c : curves) {
    os << ',' << field(c.name);
    rows = std::max(rows, c.values.size());
  }
  os << '\n';
  for (std::size_t k = 0; k < rows; ++k) {
    os << k;
    for (const auto& c : curves) {
      os << ',';
      if (k < c.values.size()) os << num(c.values[k]);
    }
    os << '\n';
  }
}

void write_decoding_csv(std::ostream& os, const std::vector<DecodingRow>& rows) {
  os << "kind,sigma,nonlinearity,seed,r2\n";
  for (const auto& r : rows) {
    os << to_string(r.network) << ',' << num(r.sigma) << ',' << to_string(r.nonlinearity) << ',' << r.seed << ','
       << num(r.r2) << '\n';
  }
}

void write_losses_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "run_id,init,param,lr,seed,step,validation_loss\n";
  for (const auto& rec : records) {
    const auto id = field(rec.config.run_id());
    for (std::size_t i = 0; i < rec.validation_losses.size(); ++i) {
      os << id << ',' << to_string(rec.config.init.kind) << ',' << num(rec.config.init.model_parameter()) << ','
         << num(rec.config.learning_rate) << ',' << rec.config.init.seed << ',' << rec.eval_steps[i] << ','
         << num(rec.validation_losses[i]) << '\n';
    }
  }
}

void write_success_csv(std::ostream& os, const std::vector<SuccessCount>& counts) {
  os << "model,successes,runs\n";
  for (const auto& c : counts) os << to_string(c.init) << ',' << c.successes << ',' << c.runs << '\n';
}

void write_profiles_csv(std::ostream& os, const std::vector<NamedProfile>& profiles) {
  os << "label,offset,mean_weight,sem\n";
  for (const auto& p : profiles) {
    const auto label = field(p.label);
    for (std::size_t i = 0; i < p.profile.offsets.size(); ++i) {
      os << label << ',' << p.profile.offsets[i] << ',' << num(p.profile.mean[i]) << ',' << num(p.profile.sem[i])
         << '\n';
    }
  }
}

void write_beta_csv(std::ostream& os, const BetaSweep& sweep) {
  os << "beta,mean_loss,sem,count\n";
  for (const auto& r : sweep.rows) os << num(r.beta) << ',' << num(r.mean_loss) << ',' << num(r.sem) << ',' << r.runs << '\n';
}

void write_henrici_csv(std::ostream& os, const std::vector<HenriciRow>& rows) {
  os << "run_id,init,initial,trained\n";
  for (const auto& r : rows) {
    os << field(r.run_id) << ',' << to_string(r.init) << ',' << num(r.initial) << ',' << num(r.trained) << '\n';
  }
}

}  // namespace nonnormal
