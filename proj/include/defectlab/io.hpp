#pragma once

#include <iosfwd>
#include <string>

#include "defectlab/space.hpp"

namespace defectlab {

// Space files are JSON documents
//   {"vertices": [{"id", "measure", "coords"?, "annotation"?}],
//    "edges":    [{"a", "b", "weight"}],
//    "metric":   [{"a", "b", "d"}]?}
// Ids may be strings or integers. Invalid input raises FormatError naming
// the line of the offending element.
WeightedSpace read_space(std::istream& in);
WeightedSpace read_space_string(const std::string& text);
WeightedSpace read_space_file(const std::string& path);

// One element per line, numbers in full-precision scientific notation.
void write_space(std::ostream& out, const WeightedSpace& space);
void write_space_file(const std::string& path, const WeightedSpace& space);

// A JSON array with one value per vertex in index order, or an object
// mapping every vertex id to its value.
Field read_field(std::istream& in, const WeightedSpace& space);
Field read_field_file(const std::string& path, const WeightedSpace& space);

}  // namespace defectlab
