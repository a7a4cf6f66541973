#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qsf/qubit.hpp"

namespace qsf::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kDomainError = 1, kNumericalError = 2 };

/// Parses "min:max:count". count must be at least 1.
AxisSpec parse_axis(const std::string& spec);

/// Comma-separated list of doubles; empty or blank gives an empty list.
std::vector<double> parse_list(const std::string& text);

/// Entry point shared by the executable and the tests. Never calls exit().
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qsf::cli
