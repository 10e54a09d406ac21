#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace degenlap {

using Json = nlohmann::ordered_json;

struct Band {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

enum class Provenance { frozen_band, analytic, paper_formula };

const char* to_string(Provenance p);

struct Observed {
  std::string name;
  double value = 0.0;
  std::optional<Band> band;
  /// Band key in the calibration file; empty for analytic bands.
  std::string band_key;
};

/// Outcome of one inequality probe. Values without a band are informational.
struct VerificationReport {
  std::string check_name;
  Json parameters = Json::object();
  std::vector<Observed> observed;
  bool passed = false;
  Provenance provenance = Provenance::frozen_band;
  /// Diagnostics for the caller; not serialised.
  std::vector<std::string> notes;
  bool missing_band = false;

  /// Adds an observed value and returns it for chaining band assignment.
  Observed& add(const std::string& name, double value);
  Observed& add(const std::string& name, double value, Band band);
  const Observed* find(const std::string& name) const;
  double value(const std::string& name) const;

  /// passed <=> extra_condition, no band is missing, and every banded value
  /// lies in its band.
  void finalize(bool extra_condition = true);

  /// First banded value, used for the suite CSV row.
  const Observed* headline() const;

  Json to_json() const;
};

/// 64-bit FNV-1a of the compact parameter dump, as 16 hex digits.
std::string param_hash(const Json& parameters);

/// Frozen calibration bands: {"version": int, "bands": {key: {lo, hi, calibrated, provenance}}}.
class BandTable {
public:
  static BandTable load(const std::string& path);
  static BandTable from_json(const Json& j);

  Json to_json() const;
  void save(const std::string& path) const;

  std::optional<Band> find(const std::string& key) const;
  void set(const std::string& key, Band band, double calibrated, const std::string& provenance = "frozen-band");
  bool empty() const { return entries_.empty(); }
  int version() const { return version_; }
  void set_version(int v) { version_ = v; }

private:
  struct Entry {
    Band band;
    double calibrated = 0.0;
    std::string provenance;
  };
  int version_ = 1;
  std::map<std::string, Entry> entries_;
};

/// Attaches the frozen band `key` to an observed value. A missing key leaves
/// the value unbanded and marks the report as failing.
void attach_band(VerificationReport& report, const std::string& observed_name, const BandTable& bands,
                 const std::string& key);

/// 17-significant-digit formatting used by every CSV writer.
std::string format_double(double v);

void write_suite_csv_header(std::ostream& out);
void write_suite_csv_row(std::ostream& out, const VerificationReport& report);

} // namespace degenlap
