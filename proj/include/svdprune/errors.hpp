#pragma once

#include <stdexcept>

namespace svdprune {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed container bytes or header.
class FormatError : public Error { public: using Error::Error; };

/// Element type is not a supported little-endian float.
class DtypeError : public Error { public: using Error::Error; };

/// Dimensions inconsistent with what the operation requires.
class ShapeError : public Error { public: using Error::Error; };

/// Values violate data invariants (NaN or Inf).
class DataError : public Error { public: using Error::Error; };

/// Filesystem read or write failure.
class IoError : public Error { public: using Error::Error; };

/// Out-of-range or inconsistent parameter.
class ParamError : public Error { public: using Error::Error; };

/// Input admits no meaningful decomposition (e.g. an all-zero matrix).
class DegenerateInputError : public Error { public: using Error::Error; };

/// An iterative kernel failed to converge within its iteration cap.
class NumericalError : public Error { public: using Error::Error; };

} // namespace svdprune
