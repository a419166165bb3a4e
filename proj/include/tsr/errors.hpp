#pragma once

#include <stdexcept>
#include <string>

namespace tsr {

/// Time argument outside the clipped schedule domain [t_clip, 1 - t_clip].
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

/// Invalid numeric or structural argument (nonpositive k, weight sum != 1, ...).
class param_error : public std::invalid_argument {
 public:
  explicit param_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A rescale policy applied where it has no meaning (e.g. CNS on a score).
class policy_error : public std::logic_error {
 public:
  explicit policy_error(const std::string& what) : std::logic_error(what) {}
};

/// Operation unsupported for the given schedule kind or parameter regime.
class schedule_error : public std::logic_error {
 public:
  explicit schedule_error(const std::string& what) : std::logic_error(what) {}
};

/// Bad experiment/CLI configuration (maps to exit code 2).
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failure while writing artifacts (maps to exit code 4).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tsr
