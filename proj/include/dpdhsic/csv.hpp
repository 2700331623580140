#pragma once

#include <iosfwd>
#include <string>

#include "dpdhsic/types.hpp"

namespace dpdhsic {

/// Dataset CSV schema: header `g<j>_<k>` for group j, coordinate k (0-based),
/// one row per observation, comma-separated, '.' decimal, UTF-8. Values are
/// written with shortest round-trip formatting, so write/read is an identity.

void write_dataset_csv(const Dataset& dataset, const std::string& path);
void write_dataset_csv(const Dataset& dataset, std::ostream& out);

/// Throws ParseError (bad header/field, with line number), InputError
/// (non-finite entries), IoError (unreadable path).
Dataset read_dataset_csv(const std::string& path);
Dataset read_dataset_csv(std::istream& in);

}  // namespace dpdhsic
