#pragma once

#include <stdexcept>
#include <string>

namespace nnal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text; the message names the row (and column, if known).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input had a header but no data rows.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// A count is out of range (too few samples, requested more than available, ...).
class SizeError : public Error {
public:
    using Error::Error;
};

/// An operation was applied to a value in the wrong state.
class StateError : public Error {
public:
    using Error::Error;
};

/// A sample id is not a member of the set it was looked up in.
class MembershipError : public Error {
public:
    using Error::Error;
};

/// Vector or matrix shapes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, divergence or a solver that did not converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Re-throws `e` as the same error type with `context` prepended to the message.
[[noreturn]] void rethrow_with_context(const std::exception& e, const std::string& context);

}  // namespace nnal
