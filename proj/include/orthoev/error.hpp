#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace orthoev {

/// Base class of every exception thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a distribution function or transform.
class domain_error : public error {
public:
    using error::error;
};

/// Transform evaluated at a singular point (e.g. xi = -1 in the inverse map).
class singularity_error : public domain_error {
public:
    using domain_error::domain_error;
};

/// Result would be +infinity (quantile 1 of an unbounded distribution).
class unbounded_error : public domain_error {
public:
    using domain_error::domain_error;
};

/// Fisher information does not exist (xi <= -1/2).
class undefined_information_error : public domain_error {
public:
    using domain_error::domain_error;
};

/// Invalid or incompatible configuration.
class config_error : public error {
public:
    using error::error;
};

/// Quadrature, root finding or optimization failed to reach tolerance.
class numerical_error : public error {
public:
    numerical_error(const std::string& what, double achieved = 0.0)
        : error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class fit_error : public error {
public:
    using error::error;
};

/// No finite starting point could be found for a chain.
class init_error : public error {
public:
    using error::error;
};

/// Malformed input file; carries the 1-based line number when known.
class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t line = 0)
        : error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace orthoev
