#pragma once

#include <stdexcept>
#include <string>

namespace cbmir {

// Base for every error raised by the library. The CLI maps IoError to exit
// code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Malformed FSET1 container: bad magic, version, truncation, non-finite values.
class FormatError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class ZeroNormError : public Error {
public:
    using Error::Error;
};

class ProvenanceError : public Error {
public:
    using Error::Error;
};

class RaggedGridError : public Error {
public:
    using Error::Error;
};

} // namespace cbmir
