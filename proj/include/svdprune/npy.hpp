#pragma once

#include <filesystem>

#include "svdprune/types.hpp"

namespace svdprune {

/// Reads an NPY v1.0 or v2.0 array file into a FeatureMatrix.
///
/// Accepts little-endian f4/f8 payloads, rank-2 shapes only, and both C and
/// Fortran storage order (Fortran input is normalized to row-major).
/// Throws FormatError (malformed/truncated header or payload), DtypeError
/// (unsupported element type), ShapeError (rank != 2 or empty axis),
/// DataError (non-finite element, first offending index reported) or
/// IoError (unreadable file).
FeatureMatrix load_matrix(const std::filesystem::path& path);

/// Writes an NPY v1.0 file: little-endian float of m.precision, C order,
/// shape (T, D), header padded to 16-byte alignment. Loading the result
/// reproduces m bit-exactly. Throws IoError on write failure.
void save_matrix(const FeatureMatrix& m, const std::filesystem::path& path);

} // namespace svdprune
