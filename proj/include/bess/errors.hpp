#pragma once

#include <stdexcept>
#include <string>

namespace bess {

// Malformed input file contents (carries a line number in the message).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Semantically invalid data: gaps, duplicates, region mismatches, leakage.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable, corrupt or incompatible cache/model files.
class CacheError : public std::runtime_error {
public:
    explicit CacheError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bess
