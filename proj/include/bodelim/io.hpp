#pragma once

// Serialization of signals, spectra and reports. Text formats carry 17
// significant digits so every value round-trips exactly.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "bodelim/limits.hpp"
#include "bodelim/report.hpp"
#include "bodelim/spectral.hpp"
#include "bodelim/stochsim.hpp"

namespace bodelim {

using Json = nlohmann::json;

/// Column order of the signal formats; absent channels are written as NaN.
inline const std::vector<std::string> kSignalColumns{"u", "v", "w", "y", "d", "e"};

/// Header t,u,v,w,y,d,e; t = k dt.
void write_signal_csv(const SignalBundle& bundle, std::ostream& os);
/// Channels that are NaN throughout are dropped. Throws DomainError on a bad header or row.
SignalBundle read_signal_csv(std::istream& is);

/// Little-endian block: magic "BLIMSIG1", uint64 sample count, float64 dt,
/// then the six channels of kSignalColumns one after another.
void write_signal_binary(const SignalBundle& bundle, std::ostream& os);
/// Throws DomainError on a wrong magic or a truncated block.
SignalBundle read_signal_binary(std::istream& is);

/// Header omega,re,im.
void write_spectrum_csv(const SpectralEstimate& est, std::ostream& os);
SpectralEstimate read_spectrum_csv(std::istream& is, std::string x = {}, std::string y = {});

/// Columns by header name. Throws DomainError on ragged rows or unparsable cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  const std::vector<double>& column(const std::string& name) const;
};
CsvTable read_csv(std::istream& is);

Json to_json(const SpectralEstimate& est);
Json to_json(const IntegralResult& r);
Json to_json(const BoundReport& b);
Json to_json(const LimitReport& rep);
Json to_json(const std::vector<LimitReport>& reps);

/// Inverse of to_json(LimitReport). Throws DomainError on a malformed record.
LimitReport report_from_json(const Json& j);
std::vector<LimitReport> reports_from_json(const Json& j);

Verdict verdict_from_string(const std::string& s);
IntegralStatus status_from_string(const std::string& s);

/// Fixed-width table of inequalities and checks, one line each.
std::string report_table(const std::vector<LimitReport>& reps);

/// Header omega,abs_T,estimate,integrand with integrand = log(estimate).
void write_curve_csv(const CurveRecord& c, std::ostream& os);

/// Writes text to path, creating parent directories. Throws std::runtime_error on I/O failure.
void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

}  // namespace bodelim
