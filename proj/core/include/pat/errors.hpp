#pragma once

#include <stdexcept>
#include <string>

namespace pat {

/// Base for every error the toolkit raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad sizes, bad ranges, bad configs).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Filesystem failure; the message always carries the offending path.
class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Non-finite values or divergence during a numerical procedure.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Container decoding failures.
class DecodeError : public Error {
public:
    using Error::Error;
};

class BadMagicError : public DecodeError {
public:
    using DecodeError::DecodeError;
};

class TruncatedError : public DecodeError {
public:
    using DecodeError::DecodeError;
};

class VersionError : public DecodeError {
public:
    using DecodeError::DecodeError;
};

/// Header fields inconsistent with each other or with the expected object.
class FormatError : public DecodeError {
public:
    using DecodeError::DecodeError;
};

class ChecksumError : public DecodeError {
public:
    using DecodeError::DecodeError;
};

}  // namespace pat
