#pragma once

#include <stdexcept>
#include <string>

namespace tnc {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Incompatible shapes, dims or grids.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Index outside its mode's range.
class BoundsError : public Error {
public:
    using Error::Error;
};

// Malformed request: bad mode lists, out-of-range tolerances, bad ranks.
class SpecError : public Error {
public:
    using Error::Error;
};

// A linear system that must be solved exactly is singular.
class SingularityError : public Error {
public:
    using Error::Error;
};

// Dense materialization would exceed the configured entry cap.
class CapExceededError : public Error {
public:
    using Error::Error;
};

// Container read/write failures and malformed headers.
class FormatError : public Error {
public:
    using Error::Error;
};

// File cannot be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace tnc
