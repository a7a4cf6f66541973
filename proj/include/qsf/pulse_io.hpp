#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "qsf/qubit.hpp"

namespace qsf {

using Json = nlohmann::json;

/// A pulse file on disk: the waveform plus free-form metadata.
struct PulseFile {
  PulseSequence pulse;
  Json meta = Json::object();
};

Json pulse_to_json(const PulseSequence& pulse, const Json& meta = Json::object());

/// Throws DomainError naming the first missing or mistyped field.
PulseFile pulse_from_json(const Json& j);

void write_pulse_file(const std::filesystem::path& path, const PulseSequence& pulse,
                      const Json& meta = Json::object());
PulseFile read_pulse_file(const std::filesystem::path& path);

/// Shortest decimal form that round-trips, at most 17 significant digits.
std::string format_double(double v);

/// Header: delta_err_rel,omega_err_rel,population
void write_scan_csv(std::ostream& os, const ScanTable& table);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace qsf
