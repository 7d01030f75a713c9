#pragma once

#include <string>

namespace surfstat {

/// Shortest of %.15g/%.16g/%.17g that parses back to exactly the same double.
std::string format_double(double v);

/// Fixed %.17g rendering used for all numeric output files.
std::string format_full(double v);

}  // namespace surfstat
