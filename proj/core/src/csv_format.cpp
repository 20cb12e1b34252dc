#include "reflow/csv_format.hpp"

#include <cstdio>

namespace reflow {

namespace {

std::string format_with(const char* spec, double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), spec, value);
    return std::string(buffer);
}

}  // namespace

std::string format_full(double value) { return format_with("%.17g", value); }

std::string format_brief(double value) { return format_with("%.6g", value); }

}  // namespace reflow
