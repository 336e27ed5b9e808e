#ifndef DLGP_ERROR_HPP
#define DLGP_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlgp {

enum class ErrorKind { config, input, domain, numerical, resource, training, format, metric, internal };

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config error";
    case ErrorKind::input: return "input error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::resource: return "resource error";
    case ErrorKind::training: return "training error";
    case ErrorKind::format: return "format error";
    case ErrorKind::metric: return "metric error";
    case ErrorKind::internal: return "internal error";
  }
  return "error";
}

/// Base of every exception thrown by the library. The kind decides the CLI
/// exit status: user-correctable kinds map to 2, everything else to 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  bool user_error() const noexcept {
    switch (kind_) {
      case ErrorKind::config:
      case ErrorKind::input:
      case ErrorKind::domain:
      case ErrorKind::format:
      case ErrorKind::resource: return true;
      default: return false;
    }
  }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
struct InputError : Error {
  explicit InputError(const std::string& w) : Error(ErrorKind::input, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};
struct ResourceError : Error {
  explicit ResourceError(const std::string& w) : Error(ErrorKind::resource, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorKind::format, w) {}
};
struct MetricError : Error {
  explicit MetricError(const std::string& w) : Error(ErrorKind::metric, w) {}
};
struct InternalError : Error {
  explicit InternalError(const std::string& w) : Error(ErrorKind::internal, w) {}
};

class TrainingError : public Error {
 public:
  TrainingError(std::size_t step, const std::string& w)
      : Error(ErrorKind::training, "step " + std::to_string(step) + ": " + w), step_(step) {}
  std::size_t step() const noexcept { return step_; }

  /// Log likelihoods recorded before the failure, when known.
  const std::vector<double>& partial_trace() const noexcept { return trace_; }
  void set_partial_trace(std::vector<double> t) { trace_ = std::move(t); }

 private:
  std::size_t step_;
  std::vector<double> trace_;
};

}  // namespace dlgp

#endif
