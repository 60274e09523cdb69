#pragma once

#include <stdexcept>
#include <string>

namespace dirosc {

// Every failure raised by the library derives from Error, so callers (the CLI
// in particular) can map the concrete type onto an exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Coordinate outside the superpotential's domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid construction parameters or configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Iterative eigensolver exceeded its sweep budget.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// Requested lattice exceeds the configured size cap.
class ResourceError : public Error {
public:
    using Error::Error;
};

// |kappa| >= 1: spin matrix is defective or has imaginary eigenvalues.
class CriticalFieldError : public Error {
public:
    using Error::Error;
};

// epsilon + m^2 < 0, or a closed form with a negative radicand.
class NoRealEnergyError : public Error {
public:
    using Error::Error;
};

// No sign change of the level equation inside the search window.
class BracketError : public Error {
public:
    using Error::Error;
};

// Level index outside the admissible range of a closed-form spectrum.
class IndexOutOfRangeError : public Error {
public:
    using Error::Error;
};

// Spinor reconstruction annihilated the state.
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

}  // namespace dirosc
