#pragma once

#include <ostream>
#include <span>
#include <string>

namespace rhclus {

/// Shortest decimal string that round-trips to the same double. Output files
/// are written exclusively through this so reruns are byte-identical.
std::string format_double(double value);

void write_csv_row(std::ostream& out, std::span<const double> values);

}  // namespace rhclus
