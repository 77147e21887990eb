#pragma once

#include <stdexcept>
#include <string>

namespace spdlab {

// Shape or size disagreement between arrays, layers, or policies.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside its documented domain (attitudes, degrees, tau, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// A tape is replayed against parameters that changed since the forward pass.
class StalenessError : public std::runtime_error {
 public:
  explicit StalenessError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent configuration (files, CLI, experiment setup).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced non-finite values; carries diagnostics in the message.
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

// Corrupt or incompatible on-disk artifact.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spdlab
