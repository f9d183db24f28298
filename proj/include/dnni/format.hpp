#pragma once

#include <string>

namespace dnni {

// Shortest decimal string that parses back to the same binary64.
std::string format_double(double value);

}  // namespace dnni
