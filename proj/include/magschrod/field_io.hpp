#ifndef MAGSCHROD_FIELD_IO_HPP
#define MAGSCHROD_FIELD_IO_HPP

#include <cstdint>
#include <string>

#include "magschrod/grid.hpp"

namespace msw {

/**
 * Field files: `<base>.raw` holds the little-endian interleaved (re, im)
 * double payload in row-major x-fastest order; `<base>.json` is the sidecar
 * with {n, box_length, role, checksum}. Round trips are bit exact and the
 * checksum is verified on read.
 */
void write_field(const std::string& base_path, const ScalarField& f, const std::string& role);
ScalarField read_field(const std::string& base_path);
std::string read_field_role(const std::string& base_path);

std::uint64_t fnv1a64(const void* data, std::size_t nbytes);

}  // namespace msw

#endif
