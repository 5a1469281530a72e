#pragma once

#include <stdexcept>
#include <string>

namespace lbp {

// Exception families map 1:1 onto the C API status codes and CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration, violated precondition or failed validation (exit 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Reported like a configuration error.
class SchemaError : public ConfigError {
public:
    SchemaError(const std::string& what, long row, long column)
        : ConfigError(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
          row_(row), column_(column) {}

    long row() const noexcept { return row_; }
    long column() const noexcept { return column_; }

private:
    long row_;
    long column_;
};

/// Filesystem failure (exit 3).
class IoError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a failed numeric check (exit 4).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace lbp
