#include "skyprobe/errors.hpp"

namespace skyprobe {

RowParseError::RowParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace skyprobe
