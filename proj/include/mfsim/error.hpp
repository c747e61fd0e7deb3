#pragma once

#include <stdexcept>
#include <string>

namespace mfsim {

class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the mathematical domain of an operation.
class domain_error : public error {
public:
    explicit domain_error(const std::string& what) : error(what) {}
};

/// Not enough (or degenerate) data for a statistic or fit.
class data_error : public error {
public:
    explicit data_error(const std::string& what) : error(what) {}
};

/// Internal bookkeeping violation, e.g. removing an order that is not resting.
class book_error : public error {
public:
    explicit book_error(const std::string& what) : error(what) {}
};

class config_error : public error {
public:
    config_error(const std::string& what, int line)
        : error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace mfsim
