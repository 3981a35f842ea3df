// Copyright (C) 2026 The objocc Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>

namespace objocc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

// Raw dataset label id without an entry in the label table.
class TaxonomyError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line) : Error(what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class DegenerateOrientationError : public Error {
public:
    using Error::Error;
};

class UndefinedLossError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A training stage was started without the checkpoints it builds on.
class DependencyError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::string last_good_checkpoint)
        : Error(what), last_good_(std::move(last_good_checkpoint)) {}
    const std::string& last_good_checkpoint() const { return last_good_; }

private:
    std::string last_good_;
};

}  // namespace objocc
