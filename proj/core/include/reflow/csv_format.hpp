#pragma once

#include <string>

namespace reflow {

// 17 significant digits; round-trips any double, used wherever bytes are compared.
std::string format_full(double value);

// 6 significant digits for human-facing summary columns.
std::string format_brief(double value);

}  // namespace reflow
