#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "nonnormal/analysis.hpp"
#include "nonnormal/harness.hpp"

namespace nonnormal {

/// CSV layouts are listed in docs/csv-schemas.md.
enum class FigureKind { kMemoryCurves, kAmplification, kDecoding, kLosses, kSuccessBars, kProfiles, kBeta };

std::string_view to_string(FigureKind kind);
/// Throws InvalidArgument for an unknown kind.
FigureKind parse_figure_kind(std::string_view name);

struct NamedCurve {
  std::string name;
  std::vector<double> values;  ///< values[k] for lags k = 0..K
};

struct DecodingRow {
  DecodingNetwork network = DecodingNetwork::kChain;
  double sigma = 0.0;
  Nonlinearity nonlinearity = Nonlinearity::kLinear;
  std::uint64_t seed = 1;
  double r2 = 0.0;
};

struct NamedProfile {
  std::string label;
  ProfileSummary profile;
};

struct HenriciRow {
  std::string run_id;
  InitKind init = InitKind::kIdentity;
  double initial = 0.0;
  double trained = 0.0;
};

/// memory_curves and amplification: k, then one column per curve. Shorter
/// curves leave trailing cells empty.
void write_curves_csv(std::ostream& os, const std::vector<NamedCurve>& curves);
void write_decoding_csv(std::ostream& os, const std::vector<DecodingRow>& rows);
/// One row per validation pass of every record.
void write_losses_csv(std::ostream& os, const std::vector<RunRecord>& records);
void write_success_csv(std::ostream& os, const std::vector<SuccessCount>& counts);
void write_profiles_csv(std::ostream& os, const std::vector<NamedProfile>& profiles);
void write_beta_csv(std::ostream& os, const BetaSweep& sweep);
void write_henrici_csv(std::ostream& os, const std::vector<HenriciRow>& rows);

}  // namespace nonnormal
