#pragma once

#include <stdexcept>
#include <string>

namespace ideatopics {

// Base of every error raised by the library. Subclasses map to the CLI exit
// codes in tools/ideatopics.cpp.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    using Error::Error;
};

class DegenerateClusterError : public Error {
public:
    using Error::Error;
};

class UndefinedSimilarityError : public Error {
public:
    using Error::Error;
};

class MissingWordError : public Error {
public:
    using Error::Error;
};

class UndefinedScoreError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ideatopics
