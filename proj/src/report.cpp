#include "degenlap/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "degenlap/errors.hpp"

namespace degenlap {

const char* to_string(Provenance p) {
  switch (p) {
  case Provenance::frozen_band:
    return "frozen-band";
  case Provenance::analytic:
    return "analytic";
  case Provenance::paper_formula:
    return "paper-formula";
  }
  return "frozen-band";
}

Observed& VerificationReport::add(const std::string& name, double value) {
  observed.push_back(Observed{name, value, std::nullopt, {}});
  return observed.back();
}

Observed& VerificationReport::add(const std::string& name, double value, Band band) {
  observed.push_back(Observed{name, value, band, {}});
  return observed.back();
}

const Observed* VerificationReport::find(const std::string& name) const {
  for (const auto& o : observed) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

double VerificationReport::value(const std::string& name) const {
  const Observed* o = find(name);
  if (!o) throw InvalidArgument("report '" + check_name + "' has no value '" + name + "'");
  return o->value;
}

void VerificationReport::finalize(bool extra_condition) {
  bool ok = extra_condition && !missing_band;
  for (const auto& o : observed) {
    if (o.band && !o.band->contains(o.value)) ok = false;
  }
  passed = ok;
}

const Observed* VerificationReport::headline() const {
  for (const auto& o : observed) {
    if (o.band) return &o;
  }
  return observed.empty() ? nullptr : &observed.front();
}

namespace {

Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

} // namespace

Json VerificationReport::to_json() const {
  Json j;
  j["check_name"] = check_name;
  j["parameters"] = parameters;
  Json obs = Json::object();
  Json bands = Json::object();
  for (const auto& o : observed) {
    obs[o.name] = number(o.value);
    if (o.band) bands[o.name] = Json::array({number(o.band->lo), number(o.band->hi)});
  }
  j["observed"] = obs;
  j["band"] = bands;
  j["passed"] = passed;
  j["provenance"] = to_string(provenance);
  return j;
}

std::string param_hash(const Json& parameters) {
  const std::string s = parameters.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BandTable BandTable::from_json(const Json& j) {
  BandTable t;
  if (!j.is_object() || !j.contains("bands") || !j["bands"].is_object()) {
    throw ConfigError("bands file: expected an object with a 'bands' object");
  }
  t.version_ = j.value("version", 1);
  for (const auto& [key, e] : j["bands"].items()) {
    if (!e.contains("lo") || !e.contains("hi")) throw ConfigError("bands file: entry '" + key + "' needs lo and hi");
    Entry entry;
    entry.band = Band{e["lo"].get<double>(), e["hi"].get<double>()};
    entry.calibrated = e.value("calibrated", 0.0);
    entry.provenance = e.value("provenance", std::string("frozen-band"));
    t.entries_[key] = entry;
  }
  return t;
}

BandTable BandTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bands file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bands file '" + path + "': " + e.what());
  }
  return from_json(j);
}

Json BandTable::to_json() const {
  Json j;
  j["version"] = version_;
  Json b = Json::object();
  for (const auto& [key, e] : entries_) {
    b[key] = Json{{"lo", e.band.lo}, {"hi", e.band.hi}, {"calibrated", e.calibrated}, {"provenance", e.provenance}};
  }
  j["bands"] = b;
  return j;
}

void BandTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write bands file '" + path + "'");
  out << to_json().dump(2) << "\n";
}

std::optional<Band> BandTable::find(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.band;
}

void BandTable::set(const std::string& key, Band band, double calibrated, const std::string& provenance) {
  entries_[key] = Entry{band, calibrated, provenance};
}

void attach_band(VerificationReport& report, const std::string& observed_name, const BandTable& bands,
                 const std::string& key) {
  for (auto& o : report.observed) {
    if (o.name != observed_name) continue;
    o.band_key = key;
    if (auto b = bands.find(key)) {
      o.band = *b;
    } else {
      report.missing_band = true;
      report.notes.push_back("no frozen band '" + key + "'");
    }
    return;
  }
  throw InvalidArgument("attach_band: report has no value '" + observed_name + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_suite_csv_header(std::ostream& out) { out << "check,param_hash,observed_max,band_lo,band_hi,passed\n"; }

void write_suite_csv_row(std::ostream& out, const VerificationReport& report) {
  const Observed* h = report.headline();
  out << report.check_name << ',' << param_hash(report.parameters) << ',' << (h ? format_double(h->value) : "nan")
      << ',';
  if (h && h->band) {
    out << format_double(h->band->lo) << ',' << format_double(h->band->hi);
  } else {
    out << ',';
  }
  out << ',' << (report.passed ? "true" : "false") << '\n';
}

} // namespace degenlap
