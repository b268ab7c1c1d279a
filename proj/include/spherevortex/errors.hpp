#ifndef SPHEREVORTEX_ERRORS_HPP
#define SPHEREVORTEX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spherevortex {

/// Input rejected by a precondition check. The message names the offending field.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Two points closer than the kernel distance floor.
class DistanceUnderflow : public NumericalError {
 public:
  DistanceUnderflow(const std::string& what, double distance)
      : NumericalError(what), distance_(distance) {}
  double distance() const noexcept { return distance_; }

 private:
  double distance_;
};

class NoConvergence : public NumericalError {
 public:
  explicit NoConvergence(const std::string& what) : NumericalError(what) {}
};

/// Blob caps of two vortices intersect at the requested radius.
class OverlappingCaps : public ValidationError {
 public:
  OverlappingCaps(const std::string& what, int i, int j) : ValidationError(what), i_(i), j_(j) {}
  int first() const noexcept { return i_; }
  int second() const noexcept { return j_; }

 private:
  int i_;
  int j_;
};

}  // namespace spherevortex

#endif
