#pragma once

#include <stdexcept>
#include <string>

namespace fedgan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix or layer shapes do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// backward() was handed a tape recorded against a different parameter state.
class InvalidTapeError : public Error {
public:
    using Error::Error;
};

/// A NaN or Inf reached a place that requires finite values.
class NumericError : public Error {
public:
    using Error::Error;
};

class EmptyBatchError : public Error {
public:
    using Error::Error;
};

class AggregationError : public Error {
public:
    using Error::Error;
};

class EmptyMetadataError : public Error {
public:
    using Error::Error;
};

/// Invalid user-supplied configuration (bad field, unresolvable preset, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

class PartitionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Structured text or binary input that does not parse.
class ParseError : public Error {
public:
    using Error::Error;
};

/// IDX container failures. Each failure mode has its own type so callers and
/// tests can tell them apart.
class IdxError : public ParseError {
public:
    using ParseError::ParseError;
};
class IdxMagicError : public IdxError {
public:
    using IdxError::IdxError;
};
class IdxTruncatedError : public IdxError {
public:
    using IdxError::IdxError;
};
class IdxCountMismatchError : public IdxError {
public:
    using IdxError::IdxError;
};

/// Data that cannot be rendered in the requested format (e.g. non-square images).
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace fedgan
