#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nicecf {

// Root of every exception thrown by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IngestError : public Error {
public:
    IngestError(std::size_t row, std::string column, const std::string& what)
        : Error("ingest error at row " + std::to_string(row) + ", column '" + column + "': " + what),
          row_(row), column_(std::move(column)) {}

    explicit IngestError(const std::string& what) : Error("ingest error: " + what) {}

    /// 1-based data row (header excluded); 0 when the error is not tied to a cell.
    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_ = 0;
    std::string column_;
};

class StatsError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class EncodeError : public Error {
public:
    using Error::Error;
};

class DistanceError : public Error {
public:
    using Error::Error;
};

/// No training row is both predicted opposite to the query and correctly classified.
class NoUnlikeNeighborError : public Error {
public:
    using Error::Error;
};

class TrainError : public Error {
public:
    using Error::Error;
};

class ModelIOError : public Error {
public:
    using Error::Error;
};

class EvalError : public Error {
public:
    using Error::Error;
};

}  // namespace nicecf
