#pragma once

// "cmx" text matrix format: a header line `cmx <rows> <cols>` followed by one
// line per row holding `re im` pairs separated by whitespace.

#include <filesystem>
#include <iosfwd>

#include "simnet/netcore.hpp"

namespace simnet::netcore {

void write_cmx(std::ostream& os, const CMatrix& m);
void write_cmx(const std::filesystem::path& path, const CMatrix& m);
CMatrix read_cmx(std::istream& is);
CMatrix read_cmx(const std::filesystem::path& path);

}  // namespace simnet::netcore
