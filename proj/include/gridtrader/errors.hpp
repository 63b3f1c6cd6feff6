#pragma once

#include <stdexcept>
#include <string>

namespace gridtrader {

// Malformed or inconsistent input data (CSV rows, config files, checkpoints).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures on read/write.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A parameter update produced non-finite values; the update was discarded.
class TrainingDiverged : public std::runtime_error {
public:
    explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

} // namespace gridtrader
