#include "qsf/pulse_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "qsf/errors.hpp"

namespace qsf {

namespace {

const Json& field_of(const Json& j, const char* key) {
  if (!j.contains(key)) throw DomainError(std::string("pulse file: missing field '") + key + "'");
  return j.at(key);
}

double number_of(const Json& j, const char* key) {
  const Json& v = field_of(j, key);
  if (!v.is_number()) throw DomainError(std::string("pulse file: field '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

Json pulse_to_json(const PulseSequence& pulse, const Json& meta) {
  Json j;
  j["omega_rad_per_s"] = pulse.field().omega();
  j["delta_max_rad_per_s"] = pulse.field().delta_max();
  j["dt_s"] = pulse.dt();
  j["deltas_rad_per_s"] = std::vector<double>(pulse.deltas().begin(), pulse.deltas().end());
  j["meta"] = meta.is_null() ? Json::object() : meta;
  return j;
}

PulseFile pulse_from_json(const Json& j) {
  if (!j.is_object()) throw DomainError("pulse file: top level must be a JSON object");
  const double omega = number_of(j, "omega_rad_per_s");
  const double dmax = number_of(j, "delta_max_rad_per_s");
  const double dt = number_of(j, "dt_s");
  const Json& arr = field_of(j, "deltas_rad_per_s");
  if (!arr.is_array()) throw DomainError("pulse file: field 'deltas_rad_per_s' must be an array");
  std::vector<double> deltas;
  deltas.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw DomainError("pulse file: 'deltas_rad_per_s' must contain numbers");
    deltas.push_back(v.get<double>());
  }
  Json meta = j.contains("meta") ? j.at("meta") : Json::object();
  return {PulseSequence(ControlField(omega, dmax), dt, std::move(deltas)), std::move(meta)};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DomainError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_pulse_file(const std::filesystem::path& path, const PulseSequence& pulse,
                      const Json& meta) {
  write_json_file(path, pulse_to_json(pulse, meta));
}

PulseFile read_pulse_file(const std::filesystem::path& path) {
  return pulse_from_json(read_json_file(path));
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

void write_scan_csv(std::ostream& os, const ScanTable& table) {
  os << "delta_err_rel,omega_err_rel,population\n";
  for (const auto& r : table)
    os << format_double(r.delta_err_rel) << ',' << format_double(r.delta_omega) << ','
       << format_double(r.population) << '\n';
}

}  // namespace qsf
