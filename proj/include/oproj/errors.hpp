#pragma once

// Exception hierarchy shared by every oproj module. All errors derive from
// oproj::Error so callers can catch the whole family at once.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace oproj {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Vector or matrix shapes do not line up.
class DimensionError : public Error
{
public:
    using Error::Error;
};

// A feature (or candidate vector) has zero norm / zero variance.
class DegenerateFeatureError : public Error
{
public:
    DegenerateFeatureError(std::string feature, const std::string& what)
        : Error(feature.empty() ? what : "feature '" + feature + "': " + what),
          feature_(std::move(feature))
    {}

    const std::string& feature() const noexcept { return feature_; }

private:
    std::string feature_;
};

// Every removal candidate collapsed during orthonormalization.
class DegenerateSubspaceError : public Error
{
public:
    using Error::Error;
};

// Unknown feature / column name.
class LookupError : public Error
{
public:
    using Error::Error;
};

// Malformed input data (CSV content, schema, non-finite values).
class DataError : public Error
{
public:
    using Error::Error;
};

// Invalid synthetic-data or configuration spec.
class SpecError : public Error
{
public:
    using Error::Error;
};

// Linear system could not be solved (e.g. singular normal equations).
class SolverError : public Error
{
public:
    using Error::Error;
};

// Every feature audit failed.
class AuditFailedError : public Error
{
public:
    using Error::Error;
};

// Base for failures while querying a black-box model. Carries the offending
// row index when one applies.
class ModelError : public Error
{
public:
    explicit ModelError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
        : Error(what), row_(row)
    {}

    std::optional<std::size_t> row() const noexcept { return row_; }

private:
    std::optional<std::size_t> row_;
};

// The model executable could not be started.
class ModelLaunchError : public ModelError
{
public:
    using ModelError::ModelError;
};

class ModelTimeoutError : public ModelError
{
public:
    using ModelError::ModelError;
};

class ModelExitError : public ModelError
{
public:
    ModelExitError(const std::string& what, int status) : ModelError(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class MalformedOutputError : public ModelError
{
public:
    using ModelError::ModelError;
};

class NonFinitePredictionError : public ModelError
{
public:
    using ModelError::ModelError;
};

class RowCountMismatchError : public ModelError
{
public:
    RowCountMismatchError(const std::string& what, std::size_t expected, std::size_t actual)
        : ModelError(what), expected_(expected), actual_(actual)
    {}

    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

// Column names or order handed to a model differ from what it expects.
class SchemaMismatchError : public ModelError
{
public:
    using ModelError::ModelError;
};

} // namespace oproj
